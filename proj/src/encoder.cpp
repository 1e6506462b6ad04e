#include "tdforest/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "tdforest/errors.hpp"
#include "tdforest/motif.hpp"

namespace tdforest {

namespace {

Eigen::VectorXd relu(const Eigen::VectorXd& z) { return z.cwiseMax(0.0); }

Eigen::VectorXd relu_back(const Eigen::VectorXd& z, const Eigen::VectorXd& dpost) {
    Eigen::VectorXd dz = dpost;
    for (Eigen::Index i = 0; i < z.size(); ++i)
        if (z[i] <= 0.0) dz[i] = 0.0;
    return dz;
}

std::vector<double> softmax(const std::vector<double>& scores) {
    const double mx = *std::max_element(scores.begin(), scores.end());
    std::vector<double> w(scores.size());
    double total = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        w[i] = std::exp(scores[i] - mx);
        total += w[i];
    }
    for (double& x : w) x /= total;
    return w;
}

// First matching edge decides the label of an ordered vertex pair, mirroring
// the tie-breaking rule of canonical_bag.
int label_row_for(const Graph& g, int u, int v, const EncoderDims& dims) {
    for (const Edge& e : g.edges) {
        if (e.src == u && e.dst == v)
            return 1 + static_cast<int>(fnv1a(e.label) %
                                        static_cast<std::uint64_t>(dims.label_rows - 1));
    }
    return 0;
}

Eigen::VectorXd build_x1(const std::vector<int>& label_rows, int motif_row,
                         const EncoderParams& p) {
    const EncoderDims& dims = p.dims;
    Eigen::VectorXd x(dims.init_in());
    for (std::size_t s = 0; s < label_rows.size(); ++s)
        x.segment(static_cast<Eigen::Index>(s) * dims.r, dims.r) =
            p.label_table.row(label_rows[s]).transpose();
    x.tail(dims.m) = p.motif_table.row(motif_row).transpose();
    return x;
}

struct BagInit {
    int kind = 0;  // 0 zero, 1 root bias, 2 bag
    std::vector<int> label_rows;
    int motif_row = 0;
    Eigen::VectorXd z1, value;
};

BagInit build_init(const BinForest& f, int node, const Graph& g, const EncoderParams& p) {
    const EncoderDims& dims = p.dims;
    BagInit out;
    const BinForest::Node& nd = f.nodes[static_cast<std::size_t>(node)];
    if (!nd.bag.has_value()) {
        out.kind = 0;
        out.value = Eigen::VectorXd::Zero(dims.h);
        return out;
    }
    const VertexSet bag = *nd.bag;
    if (bag.empty()) {
        out.kind = 1;
        out.value = p.root_bias;
        return out;
    }
    out.kind = 2;
    const CanonicalBag cb = canonical_bag(g, bag);
    const int q = static_cast<int>(cb.order.size());
    const int k = dims.k();
    if (q > k) throw Error("bag larger than the encoder width allows");
    out.motif_row = 1 + static_cast<int>(fnv1a(cb.code.bytes) %
                                         static_cast<std::uint64_t>(dims.motif_rows - 1));
    // Ordered non-diagonal slot pairs over the padded k positions; absent
    // vertices and unlabeled pairs use the reserved row 0.
    for (int i = 0; i < k; ++i) {
        for (int j = 0; j < k; ++j) {
            if (i == j) continue;
            out.label_rows.push_back(i < q && j < q ? label_row_for(g, cb.order[i], cb.order[j], dims)
                                                    : 0);
        }
    }
    const Eigen::VectorXd x = build_x1(out.label_rows, out.motif_row, p);
    out.z1 = p.w1.transpose() * x + p.b1;
    out.value = relu(out.z1);
    return out;
}

}  // namespace

EncoderParams EncoderParams::zeros(const EncoderDims& dims) {
    EncoderParams p;
    p.dims = dims;
    p.w1 = Eigen::MatrixXd::Zero(dims.init_in(), dims.h);
    p.b1 = Eigen::VectorXd::Zero(dims.h);
    p.w2 = Eigen::MatrixXd::Zero(dims.comb_in(), dims.h);
    p.b2 = Eigen::VectorXd::Zero(dims.h);
    p.w3 = Eigen::MatrixXd::Zero(dims.comb_in(), dims.h);
    p.b3 = Eigen::VectorXd::Zero(dims.h);
    p.attn_q = Eigen::MatrixXd::Zero(dims.h, dims.h);
    p.attn_k = Eigen::MatrixXd::Zero(dims.h, dims.h);
    p.attn_v = Eigen::MatrixXd::Zero(dims.h, dims.h);
    p.depth_table = Eigen::MatrixXd::Zero(dims.d_max + 1, dims.d);
    p.label_table = Eigen::MatrixXd::Zero(dims.label_rows, dims.r);
    p.motif_table = Eigen::MatrixXd::Zero(dims.motif_rows, dims.m);
    p.root_bias = Eigen::VectorXd::Zero(dims.h);
    p.w4 = Eigen::MatrixXd::Zero(2 * dims.h, dims.h_edge);
    p.b4 = Eigen::VectorXd::Zero(dims.h_edge);
    return p;
}

EncoderParams EncoderParams::seeded(const EncoderDims& dims, std::uint64_t seed) {
    EncoderParams p = zeros(dims);
    std::mt19937_64 rng(seed);
    // Explicit scaling instead of std::uniform_real_distribution keeps the
    // stream identical across standard libraries.
    auto draw = [&rng]() {
        const double unit = static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
        return 0.2 * unit - 0.1;
    };
    for (TensorRef& t : p.tensors())
        for (Eigen::Index i = 0; i < t.size(); ++i) t.data[i] = draw();
    return p;
}

std::vector<EncoderParams::TensorRef> EncoderParams::tensors() {
    auto mat = [](const char* name, Eigen::MatrixXd& m) {
        return TensorRef{name, m.data(), m.rows(), m.cols()};
    };
    auto vec = [](const char* name, Eigen::VectorXd& v) {
        return TensorRef{name, v.data(), v.size(), 1};
    };
    return {
        mat("w1", w1),       vec("b1", b1),
        mat("w2", w2),       vec("b2", b2),
        mat("w3", w3),       vec("b3", b3),
        mat("attn_q", attn_q), mat("attn_k", attn_k), mat("attn_v", attn_v),
        mat("depth_table", depth_table), mat("label_table", label_table),
        mat("motif_table", motif_table), vec("root_bias", root_bias),
        mat("w4", w4),       vec("b4", b4),
    };
}

Json EncoderParams::to_json() const {
    Json dims_doc;
    dims_doc["width"] = dims.width;
    dims_doc["h"] = dims.h;
    dims_doc["d"] = dims.d;
    dims_doc["r"] = dims.r;
    dims_doc["m"] = dims.m;
    dims_doc["h_edge"] = dims.h_edge;
    dims_doc["d_max"] = dims.d_max;
    dims_doc["label_rows"] = dims.label_rows;
    dims_doc["motif_rows"] = dims.motif_rows;

    Json tensors_doc;
    for (const TensorRef& t : const_cast<EncoderParams*>(this)->tensors()) {
        Json entry;
        entry["rows"] = t.rows;
        entry["cols"] = t.cols;
        Json data = Json::array();
        for (Eigen::Index i = 0; i < t.size(); ++i) data.push_back(t.data[i]);
        entry["data"] = std::move(data);
        tensors_doc[t.name] = std::move(entry);
    }

    Json doc;
    doc["dims"] = std::move(dims_doc);
    doc["tensors"] = std::move(tensors_doc);
    return doc;
}

EncoderParams EncoderParams::from_json(const Json& doc) {
    if (!doc.is_object() || !doc.contains("dims") || !doc.contains("tensors"))
        throw ParseError("parameter file needs 'dims' and 'tensors'", "$");
    const Json& dd = doc["dims"];
    auto dim = [&dd](const char* name) {
        if (!dd.contains(name) || !dd[name].is_number_integer())
            throw ParseError("missing integer dimension", std::string("$.dims.") + name);
        return dd[name].get<int>();
    };
    EncoderDims dims;
    dims.width = dim("width");
    dims.h = dim("h");
    dims.d = dim("d");
    dims.r = dim("r");
    dims.m = dim("m");
    dims.h_edge = dim("h_edge");
    dims.d_max = dim("d_max");
    dims.label_rows = dim("label_rows");
    dims.motif_rows = dim("motif_rows");

    EncoderParams p = zeros(dims);
    const Json& td = doc["tensors"];
    for (TensorRef& t : p.tensors()) {
        if (!td.contains(t.name))
            throw ParseError("missing tensor", "$.tensors." + t.name);
        const Json& entry = td[t.name];
        if (!entry.is_object() || !entry.contains("data"))
            throw ParseError("malformed tensor entry", "$.tensors." + t.name);
        if (entry.value("rows", -1) != t.rows || entry.value("cols", -1) != t.cols)
            throw ParseError("tensor shape mismatch", "$.tensors." + t.name);
        const Json& data = entry["data"];
        if (!data.is_array() || static_cast<Eigen::Index>(data.size()) != t.size())
            throw ParseError("tensor data length mismatch", "$.tensors." + t.name + ".data");
        for (Eigen::Index i = 0; i < t.size(); ++i)
            t.data[i] = data[static_cast<std::size_t>(i)].get<double>();
    }
    return p;
}

std::vector<int> leaf_depths(const BinForest& f) {
    std::vector<int> depth(f.nodes.size(), -1);
    std::vector<int> state(f.nodes.size(), 0);
    auto rec = [&](auto&& self, int a) -> int {
        auto ai = static_cast<std::size_t>(a);
        if (state[ai] == 2) return depth[ai];
        if (state[ai] == 1) throw Error("forest contains a cycle");
        state[ai] = 1;
        int best = 0;
        for (const std::array<int, 2>& d : f.nodes[ai].derivations)
            for (int kid : d) best = std::max(best, self(self, kid) + 1);
        state[ai] = 2;
        depth[ai] = best;
        return best;
    };
    for (std::size_t a = 0; a < f.nodes.size(); ++a) rec(rec, static_cast<int>(a));
    return depth;
}

std::vector<int> root_depths(const BinForest& f) {
    std::vector<std::vector<int>> parents(f.nodes.size());
    for (std::size_t a = 0; a < f.nodes.size(); ++a)
        for (const std::array<int, 2>& d : f.nodes[a].derivations)
            for (int kid : d) parents[static_cast<std::size_t>(kid)].push_back(static_cast<int>(a));

    std::vector<int> depth(f.nodes.size(), -1);
    std::vector<int> state(f.nodes.size(), 0);
    auto rec = [&](auto&& self, int a) -> int {
        auto ai = static_cast<std::size_t>(a);
        if (state[ai] == 2) return depth[ai];
        if (state[ai] == 1) throw Error("forest contains a cycle");
        state[ai] = 1;
        int best = 0;
        if (a != f.root)
            for (int par : parents[ai]) best = std::max(best, self(self, par) + 1);
        state[ai] = 2;
        depth[ai] = best;
        return best;
    };
    for (std::size_t a = 0; a < f.nodes.size(); ++a) rec(rec, static_cast<int>(a));
    return depth;
}

AttentionResult derivation_attention(const Eigen::VectorXd& query,
                                     const std::vector<Eigen::VectorXd>& candidates,
                                     const EncoderParams& p) {
    if (candidates.empty()) throw Error("attention needs at least one candidate");
    const double scale = 1.0 / std::sqrt(static_cast<double>(p.dims.h));
    const Eigen::VectorXd qproj = p.attn_q.transpose() * query;
    std::vector<double> scores;
    std::vector<Eigen::VectorXd> vproj;
    scores.reserve(candidates.size());
    vproj.reserve(candidates.size());
    for (const Eigen::VectorXd& c : candidates) {
        scores.push_back(qproj.dot(p.attn_k.transpose() * c) * scale);
        vproj.push_back(p.attn_v.transpose() * c);
    }
    AttentionResult out;
    out.weights = softmax(scores);
    out.combined = Eigen::VectorXd::Zero(p.dims.h);
    for (std::size_t i = 0; i < vproj.size(); ++i) out.combined += out.weights[i] * vproj[i];
    return out;
}

Eigen::VectorXd init_bag_embedding(const BinForest& f, int node, const Graph& g,
                                   const EncoderParams& p) {
    return build_init(f, node, g, p).value;
}

EdgeFeatureSet relation_features(const BinForest& f, const NodeStates& st, const Marginals& mg,
                                 const EncoderParams& p, const Graph& g) {
    EdgeFeatureSet out;
    out.feature.resize(g.edges.size());
    out.weight.assign(g.edges.size(), 0.0);
    for (std::size_t e = 0; e < g.edges.size(); ++e)
        if (g.edges[e].src != g.edges[e].dst)
            out.feature[e] = Eigen::VectorXd::Zero(p.dims.h_edge);

    const std::size_t n_src = f.src_derivations.size();
    std::vector<Eigen::VectorXd> phi(n_src);
    for (std::size_t a = 0; a < n_src; ++a) {
        Eigen::VectorXd x(2 * p.dims.h);
        x.head(p.dims.h) = st.inside[a];
        x.tail(p.dims.h) = st.outside[a];
        phi[a] = relu(p.w4.transpose() * x + p.b4);
    }

    auto add = [&](int edge, double msg, const Eigen::VectorXd& phi_a) {
        out.weight[static_cast<std::size_t>(edge)] += msg;
        out.feature[static_cast<std::size_t>(edge)] += msg * phi_a;
    };

    for (std::size_t a = 0; a < n_src; ++a) {
        const VertexSet bag_a = *f.nodes[a].bag;
        for (std::size_t r = 0; r < f.src_derivations[a].size(); ++r) {
            const double msg = mg.message[a][r];
            for (int ch : f.src_derivations[a][r]) {
                const VertexSet bag_c = *f.nodes[static_cast<std::size_t>(ch)].bag;
                for (int e : new_relations(bag_a, bag_c, g)) add(e, msg, phi[a]);
            }
        }
    }

    // Relations already complete inside the root bag have no arc above them;
    // a virtual arc onto the root carries them with the root's whole mass.
    const double root_mass = mg.node[static_cast<std::size_t>(f.root)];
    const VertexSet root_bag = *f.nodes[static_cast<std::size_t>(f.root)].bag;
    for (int e : new_relations(VertexSet{}, root_bag, g))
        add(e, root_mass, phi[static_cast<std::size_t>(f.root)]);

    return out;
}

ForestEncoder::ForestEncoder(const BinForest& f, const Graph& g, const EncoderParams& p)
    : f_(f), g_(g), p_(p) {}

void ForestEncoder::forward() {
    const std::size_t n = f_.nodes.size();
    const EncoderDims& dims = p_.dims;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dims.h));

    kind_.assign(n, InitKind::kZero);
    label_row_.assign(n, {});
    motif_row_.assign(n, 0);
    z1_.assign(n, Eigen::VectorXd());
    init_.assign(n, Eigen::VectorXd());
    qproj_.assign(n, Eigen::VectorXd());
    in_ders_.assign(n, {});
    out_occs_.assign(n, {});
    out_w_.assign(n, {});
    states_ = NodeStates{};
    states_.inside.assign(n, Eigen::VectorXd());
    states_.outside.assign(n, Eigen::VectorXd());
    states_.weights.assign(n, {});

    for (std::size_t a = 0; a < n; ++a) {
        BagInit bi = build_init(f_, static_cast<int>(a), g_, p_);
        kind_[a] = bi.kind == 0 ? InitKind::kZero
                 : bi.kind == 1 ? InitKind::kRootBias
                                : InitKind::kBag;
        label_row_[a] = std::move(bi.label_rows);
        motif_row_[a] = bi.motif_row;
        z1_[a] = std::move(bi.z1);
        init_[a] = std::move(bi.value);
        qproj_[a] = p_.attn_q.transpose() * init_[a];
    }

    states_.leaf_depth = leaf_depths(f_);
    states_.root_depth = root_depths(f_);

    inside_order_.resize(n);
    for (std::size_t a = 0; a < n; ++a) inside_order_[a] = static_cast<int>(a);
    std::sort(inside_order_.begin(), inside_order_.end(), [&](int x, int y) {
        const int dx = states_.leaf_depth[static_cast<std::size_t>(x)];
        const int dy = states_.leaf_depth[static_cast<std::size_t>(y)];
        return dx != dy ? dx < dy : x < y;
    });
    outside_order_ = inside_order_;
    std::sort(outside_order_.begin(), outside_order_.end(), [&](int x, int y) {
        const int dx = states_.root_depth[static_cast<std::size_t>(x)];
        const int dy = states_.root_depth[static_cast<std::size_t>(y)];
        return dx != dy ? dx < dy : x < y;
    });

    // Inside sweep, children first.
    for (int a : inside_order_) {
        const auto ai = static_cast<std::size_t>(a);
        const auto& ders = f_.nodes[ai].derivations;
        if (ders.empty()) {
            states_.inside[ai] = init_[ai];
            continue;
        }
        std::vector<double> scores;
        scores.reserve(ders.size());
        for (const std::array<int, 2>& kids : ders) {
            InsideDeriv tr;
            tr.kids = kids;
            Eigen::VectorXd x2(dims.comb_in());
            for (int s = 0; s < 2; ++s) {
                const int kid = kids[static_cast<std::size_t>(s)];
                const auto ki = static_cast<std::size_t>(kid);
                const int gap = kid == f_.null_id
                                    ? 0
                                    : std::clamp(states_.leaf_depth[ai] - states_.leaf_depth[ki],
                                                 1, dims.d_max);
                tr.gap_row[static_cast<std::size_t>(s)] = gap;
                const Eigen::Index off = static_cast<Eigen::Index>(s) * (dims.h + dims.d);
                x2.segment(off, dims.h) = states_.inside[ki];
                x2.segment(off + dims.h, dims.d) = p_.depth_table.row(gap).transpose();
            }
            tr.z = p_.w2.transpose() * x2 + p_.b2;
            tr.v = relu(tr.z);
            tr.kproj = p_.attn_k.transpose() * tr.v;
            tr.vproj = p_.attn_v.transpose() * tr.v;
            scores.push_back(qproj_[ai].dot(tr.kproj) * scale);
            in_ders_[ai].push_back(std::move(tr));
        }
        states_.weights[ai] = softmax(scores);
        Eigen::VectorXd combined = Eigen::VectorXd::Zero(dims.h);
        for (std::size_t r = 0; r < in_ders_[ai].size(); ++r)
            combined += states_.weights[ai][r] * in_ders_[ai][r].vproj;
        states_.inside[ai] = std::move(combined);
    }

    // Parent occurrences, in (parent id, derivation, slot) order.
    for (std::size_t x = 0; x < n; ++x) {
        const auto& ders = f_.nodes[x].derivations;
        for (std::size_t r = 0; r < ders.size(); ++r) {
            for (int s = 0; s < 2; ++s) {
                const int kid = ders[r][static_cast<std::size_t>(s)];
                if (kid == f_.null_id) continue;
                OutsideOcc occ;
                occ.parent = static_cast<int>(x);
                occ.der = static_cast<int>(r);
                occ.pos = s;
                occ.sibling = ders[r][static_cast<std::size_t>(1 - s)];
                out_occs_[static_cast<std::size_t>(kid)].push_back(std::move(occ));
            }
        }
    }

    // Outside sweep, parents first.
    for (int a : outside_order_) {
        const auto ai = static_cast<std::size_t>(a);
        if (a == f_.root) {
            states_.outside[ai] = init_[ai];
            continue;
        }
        auto& occs = out_occs_[ai];
        if (occs.empty()) {  // the NULL padding leaf
            states_.outside[ai] = Eigen::VectorXd::Zero(dims.h);
            continue;
        }
        std::vector<double> scores;
        scores.reserve(occs.size());
        for (OutsideOcc& occ : occs) {
            const auto pi = static_cast<std::size_t>(occ.parent);
            const auto si = static_cast<std::size_t>(occ.sibling);
            occ.gap_row = std::clamp(states_.root_depth[ai] - states_.root_depth[pi], 1, dims.d_max);
            Eigen::VectorXd x3(dims.comb_in());
            x3.head(dims.h) = states_.outside[pi];
            x3.segment(dims.h, dims.d) = p_.depth_table.row(occ.gap_row).transpose();
            x3.segment(dims.h + dims.d, dims.h) = states_.inside[si];
            x3.tail(dims.d).setZero();
            occ.z = p_.w3.transpose() * x3 + p_.b3;
            occ.u = relu(occ.z);
            occ.kproj = p_.attn_k.transpose() * occ.u;
            occ.vproj = p_.attn_v.transpose() * occ.u;
            scores.push_back(qproj_[ai].dot(occ.kproj) * scale);
        }
        out_w_[ai] = softmax(scores);
        Eigen::VectorXd combined = Eigen::VectorXd::Zero(dims.h);
        for (std::size_t r = 0; r < occs.size(); ++r)
            combined += out_w_[ai][r] * occs[r].vproj;
        states_.outside[ai] = std::move(combined);
    }

    marg_ = marginals(f_, states_.weights);

    const std::size_t n_src = f_.src_derivations.size();
    z4_.assign(n, Eigen::VectorXd());
    phi_.assign(n, Eigen::VectorXd());
    for (std::size_t a = 0; a < n_src; ++a) {
        Eigen::VectorXd x4(2 * dims.h);
        x4.head(dims.h) = states_.inside[a];
        x4.tail(dims.h) = states_.outside[a];
        z4_[a] = p_.w4.transpose() * x4 + p_.b4;
        phi_[a] = relu(z4_[a]);
    }

    feats_ = relation_features(f_, states_, marg_, p_, g_);
    ran_ = true;
}

void ForestEncoder::backward(const std::vector<Eigen::VectorXd>& d_feature, bool seed_state_sum,
                             EncoderParams& grad) const {
    if (!ran_) throw Error("backward before forward");
    const std::size_t n = f_.nodes.size();
    const EncoderDims& dims = p_.dims;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dims.h));

    std::vector<Eigen::VectorXd> de(n, Eigen::VectorXd::Zero(dims.h));
    std::vector<Eigen::VectorXd> dee(n, Eigen::VectorXd::Zero(dims.h));
    std::vector<Eigen::VectorXd> dB(n, Eigen::VectorXd::Zero(dims.h));
    std::vector<std::vector<double>> dw_ext(n);
    for (std::size_t a = 0; a < n; ++a)
        dw_ext[a].assign(f_.nodes[a].derivations.size(), 0.0);

    if (seed_state_sum) {
        for (std::size_t a = 0; a < n; ++a) {
            de[a].array() += 1.0;
            dee[a].array() += 1.0;
        }
    }

    // Feature head and expected-tree marginals.
    if (!d_feature.empty()) {
        const std::size_t n_src = f_.src_derivations.size();
        std::vector<Eigen::VectorXd> dphi(n_src, Eigen::VectorXd::Zero(dims.h_edge));
        std::vector<std::vector<double>> dmsg(n);
        for (std::size_t a = 0; a < n; ++a) dmsg[a].assign(f_.nodes[a].derivations.size(), 0.0);

        for (std::size_t a = 0; a < n_src; ++a) {
            const VertexSet bag_a = *f_.nodes[a].bag;
            for (std::size_t r = 0; r < f_.src_derivations[a].size(); ++r) {
                for (int ch : f_.src_derivations[a][r]) {
                    const VertexSet bag_c = *f_.nodes[static_cast<std::size_t>(ch)].bag;
                    for (int e : new_relations(bag_a, bag_c, g_)) {
                        const auto ei = static_cast<std::size_t>(e);
                        if (d_feature[ei].size() == 0) continue;
                        dphi[a] += marg_.message[a][r] * d_feature[ei];
                        dmsg[a][r] += phi_[a].dot(d_feature[ei]);
                    }
                }
            }
        }
        const auto ri = static_cast<std::size_t>(f_.root);
        for (int e : new_relations(VertexSet{}, *f_.nodes[ri].bag, g_)) {
            const auto ei = static_cast<std::size_t>(e);
            if (d_feature[ei].size() == 0) continue;
            dphi[ri] += d_feature[ei];  // the root's mass is the constant 1
        }

        for (std::size_t a = 0; a < n_src; ++a) {
            const Eigen::VectorXd dz4 = relu_back(z4_[a], dphi[a]);
            Eigen::VectorXd x4(2 * dims.h);
            x4.head(dims.h) = states_.inside[a];
            x4.tail(dims.h) = states_.outside[a];
            grad.w4 += x4 * dz4.transpose();
            grad.b4 += dz4;
            const Eigen::VectorXd dx4 = p_.w4 * dz4;
            de[a] += dx4.head(dims.h);
            dee[a] += dx4.tail(dims.h);
        }

        // Marginal recursion backward, children before parents.  The root's
        // own mass is pinned to 1, so gradient into it is dropped.
        std::vector<double> dc(n, 0.0);
        for (int a : inside_order_) {
            const auto ai = static_cast<std::size_t>(a);
            const auto& ders = f_.nodes[ai].derivations;
            for (std::size_t r = 0; r < ders.size(); ++r) {
                const double dm = dmsg[ai][r] + dc[static_cast<std::size_t>(ders[r][0])] +
                                  dc[static_cast<std::size_t>(ders[r][1])];
                dc[ai] += states_.weights[ai][r] * dm;
                dw_ext[ai][r] += marg_.node[ai] * dm;
            }
        }
    }

    // Outside sweep backward, deepest first, pushing into parents and
    // siblings which are handled later.
    for (auto it = outside_order_.rbegin(); it != outside_order_.rend(); ++it) {
        const int a = *it;
        const auto ai = static_cast<std::size_t>(a);
        if (a == f_.root) {
            dB[ai] += dee[ai];
            continue;
        }
        const auto& occs = out_occs_[ai];
        if (occs.empty()) continue;  // NULL leaf: its outside state is fixed zero
        const std::vector<double>& w = out_w_[ai];

        std::vector<double> dw(occs.size(), 0.0);
        for (std::size_t r = 0; r < occs.size(); ++r)
            dw[r] = occs[r].vproj.dot(dee[ai]);
        double sbar = 0.0;
        for (std::size_t r = 0; r < occs.size(); ++r) sbar += w[r] * dw[r];
        Eigen::VectorXd dqproj = Eigen::VectorXd::Zero(dims.h);
        for (std::size_t r = 0; r < occs.size(); ++r) {
            const OutsideOcc& occ = occs[r];
            const double ds = w[r] * (dw[r] - sbar);
            const Eigen::VectorXd dvproj = w[r] * dee[ai];
            const Eigen::VectorXd dkproj = scale * ds * qproj_[ai];
            dqproj += scale * ds * occ.kproj;
            grad.attn_v += occ.u * dvproj.transpose();
            grad.attn_k += occ.u * dkproj.transpose();
            const Eigen::VectorXd du = p_.attn_v * dvproj + p_.attn_k * dkproj;
            const Eigen::VectorXd dz3 = relu_back(occ.z, du);
            const auto pi = static_cast<std::size_t>(occ.parent);
            const auto si = static_cast<std::size_t>(occ.sibling);
            Eigen::VectorXd x3(dims.comb_in());
            x3.head(dims.h) = states_.outside[pi];
            x3.segment(dims.h, dims.d) = p_.depth_table.row(occ.gap_row).transpose();
            x3.segment(dims.h + dims.d, dims.h) = states_.inside[si];
            x3.tail(dims.d).setZero();
            grad.w3 += x3 * dz3.transpose();
            grad.b3 += dz3;
            const Eigen::VectorXd dx3 = p_.w3 * dz3;
            dee[pi] += dx3.head(dims.h);
            grad.depth_table.row(occ.gap_row) += dx3.segment(dims.h, dims.d).transpose();
            de[si] += dx3.segment(dims.h + dims.d, dims.h);
        }
        grad.attn_q += init_[ai] * dqproj.transpose();
        dB[ai] += p_.attn_q * dqproj;
    }

    // Inside sweep backward, parents first.
    for (auto it = inside_order_.rbegin(); it != inside_order_.rend(); ++it) {
        const int a = *it;
        const auto ai = static_cast<std::size_t>(a);
        const auto& ders = in_ders_[ai];
        if (ders.empty()) {
            dB[ai] += de[ai];
            continue;
        }
        const std::vector<double>& w = states_.weights[ai];

        std::vector<double> dw(ders.size(), 0.0);
        for (std::size_t r = 0; r < ders.size(); ++r)
            dw[r] = ders[r].vproj.dot(de[ai]) + dw_ext[ai][r];
        double sbar = 0.0;
        for (std::size_t r = 0; r < ders.size(); ++r) sbar += w[r] * dw[r];
        Eigen::VectorXd dqproj = Eigen::VectorXd::Zero(dims.h);
        for (std::size_t r = 0; r < ders.size(); ++r) {
            const InsideDeriv& der = ders[r];
            const double ds = w[r] * (dw[r] - sbar);
            const Eigen::VectorXd dvproj = w[r] * de[ai];
            const Eigen::VectorXd dkproj = scale * ds * qproj_[ai];
            dqproj += scale * ds * der.kproj;
            grad.attn_v += der.v * dvproj.transpose();
            grad.attn_k += der.v * dkproj.transpose();
            const Eigen::VectorXd dv = p_.attn_v * dvproj + p_.attn_k * dkproj;
            const Eigen::VectorXd dz2 = relu_back(der.z, dv);
            Eigen::VectorXd x2(dims.comb_in());
            for (int s = 0; s < 2; ++s) {
                const auto ki = static_cast<std::size_t>(der.kids[static_cast<std::size_t>(s)]);
                const Eigen::Index off = static_cast<Eigen::Index>(s) * (dims.h + dims.d);
                x2.segment(off, dims.h) = states_.inside[ki];
                x2.segment(off + dims.h, dims.d) =
                    p_.depth_table.row(der.gap_row[static_cast<std::size_t>(s)]).transpose();
            }
            grad.w2 += x2 * dz2.transpose();
            grad.b2 += dz2;
            const Eigen::VectorXd dx2 = p_.w2 * dz2;
            for (int s = 0; s < 2; ++s) {
                const auto ki = static_cast<std::size_t>(der.kids[static_cast<std::size_t>(s)]);
                const Eigen::Index off = static_cast<Eigen::Index>(s) * (dims.h + dims.d);
                de[ki] += dx2.segment(off, dims.h);
                grad.depth_table.row(der.gap_row[static_cast<std::size_t>(s)]) +=
                    dx2.segment(off + dims.h, dims.d).transpose();
            }
        }
        grad.attn_q += init_[ai] * dqproj.transpose();
        dB[ai] += p_.attn_q * dqproj;
    }

    // Initial embeddings.
    for (std::size_t a = 0; a < n; ++a) {
        switch (kind_[a]) {
            case InitKind::kZero:
                break;
            case InitKind::kRootBias:
                grad.root_bias += dB[a];
                break;
            case InitKind::kBag: {
                const Eigen::VectorXd dz1 = relu_back(z1_[a], dB[a]);
                const Eigen::VectorXd x1 = build_x1(label_row_[a], motif_row_[a], p_);
                grad.w1 += x1 * dz1.transpose();
                grad.b1 += dz1;
                const Eigen::VectorXd dx1 = p_.w1 * dz1;
                for (std::size_t s = 0; s < label_row_[a].size(); ++s)
                    grad.label_table.row(label_row_[a][s]) +=
                        dx1.segment(static_cast<Eigen::Index>(s) * dims.r, dims.r).transpose();
                grad.motif_table.row(motif_row_[a]) += dx1.tail(dims.m).transpose();
                break;
            }
        }
    }
}

EncoderParams ForestEncoder::grad_state_sum() const {
    EncoderParams grad = EncoderParams::zeros(p_.dims);
    backward({}, true, grad);
    return grad;
}

EncoderParams ForestEncoder::grad_feature_sum() const {
    if (!ran_) throw Error("backward before forward");
    EncoderParams grad = EncoderParams::zeros(p_.dims);
    std::vector<Eigen::VectorXd> seed(feats_.feature.size());
    for (std::size_t e = 0; e < feats_.feature.size(); ++e)
        if (feats_.feature[e].size() > 0)
            seed[e] = Eigen::VectorXd::Ones(p_.dims.h_edge);
    backward(seed, false, grad);
    return grad;
}

}  // namespace tdforest
