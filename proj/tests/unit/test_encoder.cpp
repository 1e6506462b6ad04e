#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "helpers.hpp"
#include "tdforest/encoder.hpp"
#include "tdforest/forest.hpp"

using namespace tdforest;
using testutil::make_graph;

namespace {

EncoderDims small_dims(int width) {
    EncoderDims dims;
    dims.width = width;
    dims.h = 6;
    dims.d = 3;
    dims.r = 5;
    dims.m = 4;
    dims.h_edge = 3;
    dims.d_max = 3;
    dims.label_rows = 8;
    dims.motif_rows = 8;
    return dims;
}

// Star with a pendant tail: the width-1 forest of this graph exercises every
// structural case at once (synthetic root, a three-child derivation that
// needs folding, and a one-child derivation that needs NULL padding).
Graph star_with_tail() {
    return make_graph(5, {{0, 1, "a"}, {0, 2, "b"}, {0, 3, "c"}, {3, 4, "d"}}, 0);
}

double state_loss(const BinForest& f, const Graph& g, const EncoderParams& p) {
    ForestEncoder enc(f, g, p);
    enc.forward();
    double total = 0;
    for (const Eigen::VectorXd& v : enc.states().inside) total += v.sum();
    for (const Eigen::VectorXd& v : enc.states().outside) total += v.sum();
    return total;
}

double feature_loss(const BinForest& f, const Graph& g, const EncoderParams& p) {
    ForestEncoder enc(f, g, p);
    enc.forward();
    double total = 0;
    for (const Eigen::VectorXd& v : enc.features().feature)
        if (v.size() > 0) total += v.sum();
    return total;
}

// Central-difference check of every parameter entry against the analytic
// gradient.  Returns the number of entries whose relative error exceeds tol.
template <typename Loss>
int gradcheck(const BinForest& f, const Graph& g, const EncoderParams& base,
              EncoderParams analytic, Loss&& loss, double tol) {
    EncoderParams probe = base;
    std::vector<EncoderParams::TensorRef> refs = probe.tensors();
    std::vector<EncoderParams::TensorRef> grads = analytic.tensors();
    auto numeric_at = [&](std::size_t t, Eigen::Index i, double eps) {
        const double keep = refs[t].data[i];
        refs[t].data[i] = keep + eps;
        const double up = loss(f, g, probe);
        refs[t].data[i] = keep - eps;
        const double down = loss(f, g, probe);
        refs[t].data[i] = keep;
        return (up - down) / (2 * eps);
    };
    auto rel_err = [](double a, double n) {
        return std::abs(a - n) / std::max(1.0, std::abs(a) + std::abs(n));
    };
    int bad = 0;
    for (std::size_t t = 0; t < refs.size(); ++t) {
        for (Eigen::Index i = 0; i < refs[t].size(); ++i) {
            const double a = grads[t].data[i];
            double numeric = numeric_at(t, i, 1e-5);
            // Refine once if the step may have straddled a relu kink.
            if (rel_err(a, numeric) > tol) numeric = numeric_at(t, i, 1e-6);
            if (rel_err(a, numeric) > tol) {
                ++bad;
                MESSAGE("tensor " << refs[t].name << " entry " << i << ": analytic " << a
                                  << " numeric " << numeric);
            }
        }
    }
    return bad;
}

}  // namespace

TEST_CASE("seeded parameters are reproducible, in range, and follow the documented stream") {
    const EncoderDims dims = small_dims(1);
    EncoderParams a = EncoderParams::seeded(dims, 123);
    EncoderParams b = EncoderParams::seeded(dims, 123);
    EncoderParams c = EncoderParams::seeded(dims, 124);

    bool all_equal = true, any_differs = false;
    const auto ra = a.tensors(), rb = b.tensors(), rc = c.tensors();
    for (std::size_t t = 0; t < ra.size(); ++t)
        for (Eigen::Index i = 0; i < ra[t].size(); ++i) {
            all_equal &= ra[t].data[i] == rb[t].data[i];
            any_differs |= ra[t].data[i] != rc[t].data[i];
            CHECK(std::abs(ra[t].data[i]) <= 0.1);
        }
    CHECK(all_equal);
    CHECK(any_differs);

    // The stream is pinned: mt19937_64 output scaled by 2^-53, tensor by
    // tensor in declaration order, entries in column-major storage order.
    std::mt19937_64 rng(123);
    const double first =
        0.2 * (static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0)) - 0.1;
    CHECK(a.w1(0, 0) == first);
}

TEST_CASE("parameter JSON roundtrip is bit exact") {
    EncoderParams p = EncoderParams::seeded(small_dims(1), 9);
    EncoderParams back = EncoderParams::from_json(p.to_json());
    CHECK(back.dims == p.dims);
    const auto rp = p.tensors(), rb = back.tensors();
    REQUIRE(rp.size() == rb.size());
    for (std::size_t t = 0; t < rp.size(); ++t) {
        REQUIRE(rp[t].rows == rb[t].rows);
        REQUIRE(rp[t].cols == rb[t].cols);
        for (Eigen::Index i = 0; i < rp[t].size(); ++i)
            CHECK(rp[t].data[i] == rb[t].data[i]);
    }
}

TEST_CASE("depth sweeps on a hand-built forest") {
    // root 0 -> (1, 2); 1 -> (3, NULL); 2 and 3 leaves; NULL id 4.
    BinForest f;
    f.nodes.resize(5);
    for (int i = 0; i < 4; ++i) {
        f.nodes[static_cast<std::size_t>(i)].bag = VertexSet::single(i);
        f.nodes[static_cast<std::size_t>(i)].src = i;
    }
    f.nodes[4].aux = f.nodes[4].null_leaf = true;
    f.nodes[0].derivations = {{1, 2}};
    f.nodes[1].derivations = {{3, 4}};
    f.root = 0;
    f.null_id = 4;
    f.src_derivations = {{{1, 2}}, {{3}}, {}, {}};

    CHECK(leaf_depths(f) == std::vector<int>{2, 1, 0, 0, 0});
    CHECK(root_depths(f) == std::vector<int>{0, 1, 1, 2, 2});
}

TEST_CASE("depth invariants on a real forest") {
    const Graph g = testutil::amr_graph();
    const BinForest f = binarize(build_forest(g, 2, false));
    const std::vector<int> leaf = leaf_depths(f);
    const std::vector<int> root = root_depths(f);
    CHECK(root[static_cast<std::size_t>(f.root)] == 0);
    for (std::size_t a = 0; a < f.nodes.size(); ++a) {
        if (f.nodes[a].derivations.empty()) {
            CHECK(leaf[a] == 0);
        } else {
            int expect = 0;
            for (const auto& d : f.nodes[a].derivations)
                expect = std::max({expect, leaf[static_cast<std::size_t>(d[0])] + 1,
                                   leaf[static_cast<std::size_t>(d[1])] + 1});
            CHECK(leaf[a] == expect);
            for (const auto& d : f.nodes[a].derivations) {
                CHECK(root[static_cast<std::size_t>(d[0])] >= root[a] + 1);
                CHECK(root[static_cast<std::size_t>(d[1])] >= root[a] + 1);
            }
        }
    }
}

TEST_CASE("attention weights form a simplex and match the direct formula") {
    const EncoderDims dims = small_dims(1);
    const EncoderParams p = EncoderParams::seeded(dims, 5);
    std::mt19937_64 rng(6);
    auto randvec = [&rng, &dims] {
        Eigen::VectorXd v(dims.h);
        for (int i = 0; i < dims.h; ++i) v[i] = static_cast<double>(rng() % 1000) / 500.0 - 1.0;
        return v;
    };

    const Eigen::VectorXd query = randvec();
    std::vector<Eigen::VectorXd> cands;
    for (int r = 0; r < 4; ++r) cands.push_back(randvec());
    const AttentionResult got = derivation_attention(query, cands, p);

    REQUIRE(got.weights.size() == 4);
    double sum = 0;
    for (double w : got.weights) {
        CHECK(w >= 0);
        sum += w;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));

    const Eigen::VectorXd q = p.attn_q.transpose() * query;
    Eigen::VectorXd scores(4);
    for (int r = 0; r < 4; ++r)
        scores[r] = q.dot(p.attn_k.transpose() * cands[static_cast<std::size_t>(r)]) /
                    std::sqrt(static_cast<double>(dims.h));
    const Eigen::VectorXd soft =
        (scores.array() - scores.maxCoeff()).exp() / (scores.array() - scores.maxCoeff()).exp().sum();
    Eigen::VectorXd combined = Eigen::VectorXd::Zero(dims.h);
    for (int r = 0; r < 4; ++r)
        combined += soft[r] * (p.attn_v.transpose() * cands[static_cast<std::size_t>(r)]);
    for (int r = 0; r < 4; ++r)
        CHECK(got.weights[static_cast<std::size_t>(r)] == doctest::Approx(soft[r]).epsilon(1e-12));
    for (int i = 0; i < dims.h; ++i)
        CHECK(got.combined[i] == doctest::Approx(combined[i]).epsilon(1e-12));

    // A lone candidate always gets all the mass.
    const AttentionResult solo = derivation_attention(query, {cands[0]}, p);
    REQUIRE(solo.weights.size() == 1);
    CHECK(solo.weights[0] == 1.0);
}

TEST_CASE("initial embeddings by node kind") {
    const Graph g = star_with_tail();
    const BinForest f = binarize(build_forest(g, 1, false));
    const EncoderParams p = EncoderParams::seeded(small_dims(1), 11);

    bool saw_aux = false, saw_null = false, saw_bag = false, saw_empty = false;
    for (std::size_t i = 0; i < f.nodes.size(); ++i) {
        const Eigen::VectorXd e = init_bag_embedding(f, static_cast<int>(i), g, p);
        REQUIRE(e.size() == p.dims.h);
        if (f.nodes[i].null_leaf) {
            saw_null = true;
            CHECK(e.isZero(0.0));
        } else if (f.nodes[i].aux) {
            saw_aux = true;
            CHECK(e.isZero(0.0));
        } else if (f.nodes[i].bag->empty()) {
            // The synthetic empty-bag root reads the learned bias directly.
            saw_empty = true;
            CHECK(e == p.root_bias);
        } else {
            saw_bag = true;
            CHECK((e.array() >= 0).all());  // relu output
        }
    }
    CHECK(saw_aux);
    CHECK(saw_null);
    CHECK(saw_bag);
    CHECK(saw_empty);
}

TEST_CASE("forward pass is deterministic and weights are simplices") {
    const Graph g = testutil::amr_graph();
    const BinForest f = binarize(build_forest(g, 2, false));
    const EncoderParams p = EncoderParams::seeded(EncoderDims{}, 3);

    ForestEncoder e1(f, g, p), e2(f, g, p);
    e1.forward();
    e2.forward();
    for (std::size_t i = 0; i < f.nodes.size(); ++i) {
        CHECK(e1.states().inside[i] == e2.states().inside[i]);
        CHECK(e1.states().outside[i] == e2.states().outside[i]);
    }
    for (std::size_t i = 0; i < f.nodes.size(); ++i) {
        const std::vector<double>& w = e1.states().weights[i];
        REQUIRE(w.size() == f.nodes[i].derivations.size());
        if (w.empty()) continue;
        double sum = 0;
        for (double x : w) {
            CHECK(x >= 0);
            sum += x;
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }
    for (std::size_t i = 0; i < f.nodes.size(); ++i) {
        const std::vector<double>& w = e1.outside_weights()[i];
        if (w.empty()) continue;
        double sum = 0;
        for (double x : w) sum += x;
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("states do not depend on how the input numbers its vertices") {
    const Graph g = testutil::amr_graph();
    const Forest f = build_forest(g, 2, false);
    const EncoderParams p = EncoderParams::seeded(EncoderDims{}, 17);

    // Renumber vertices by pi, rewriting the graph and every stored set; the
    // forest keeps its node order, so states line up index for index.
    const std::vector<int> pi{3, 0, 5, 1, 4, 2};
    auto map_set = [&pi](VertexSet s) {
        VertexSet out;
        for_each_vertex(s, [&](int v) { out.add(pi[static_cast<std::size_t>(v)]); });
        return out;
    };
    Graph h;
    h.labels.resize(g.labels.size());
    h.orig_ids.resize(g.orig_ids.size());
    for (int v = 0; v < g.n(); ++v) {
        h.labels[static_cast<std::size_t>(pi[static_cast<std::size_t>(v)])] =
            g.labels[static_cast<std::size_t>(v)];
        h.orig_ids[static_cast<std::size_t>(pi[static_cast<std::size_t>(v)])] =
            g.orig_ids[static_cast<std::size_t>(v)];
    }
    for (const Edge& e : g.edges) {
        Edge m = e;
        m.src = pi[static_cast<std::size_t>(e.src)];
        m.dst = pi[static_cast<std::size_t>(e.dst)];
        h.edges.push_back(m);
    }
    h.root = pi[static_cast<std::size_t>(*g.root)];

    Forest fp = f;
    for (ForestNode& n : fp.nodes) {
        n.bag = map_set(n.bag);
        n.interface = map_set(n.interface);
        n.component = map_set(n.component);
    }

    const BinForest bf = binarize(f);
    const BinForest bfp = binarize(fp);
    ForestEncoder e1(bf, g, p), e2(bfp, h, p);
    e1.forward();
    e2.forward();
    for (std::size_t i = 0; i < bf.nodes.size(); ++i) {
        CHECK((e1.states().inside[i] - e2.states().inside[i]).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK((e1.states().outside[i] - e2.states().outside[i]).cwiseAbs().maxCoeff() <= 1e-12);
    }
    const EdgeFeatureSet& f1 = e1.features();
    const EdgeFeatureSet& f2 = e2.features();
    for (std::size_t i = 0; i < f1.feature.size(); ++i) {
        CHECK(f1.weight[i] == doctest::Approx(f2.weight[i]).epsilon(1e-12));
        if (f1.feature[i].size() > 0)
            CHECK((f1.feature[i] - f2.feature[i]).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("single-bag forest: the virtual root arc carries every edge") {
    const Graph g = make_graph(2, {{0, 1, "only"}}, 0);
    const BinForest f = binarize(build_forest(g, 1, true));
    REQUIRE(f.nodes.size() == 1);
    const EncoderParams p = EncoderParams::seeded(small_dims(1), 23);
    ForestEncoder enc(f, g, p);
    enc.forward();

    CHECK(enc.node_marginals().node[0] == 1.0);
    const EdgeFeatureSet& fs = enc.features();
    REQUIRE(fs.weight.size() == 1);
    CHECK(fs.weight[0] == 1.0);

    Eigen::VectorXd x(2 * p.dims.h);
    x << enc.states().inside[0], enc.states().outside[0];
    const Eigen::VectorXd phi = (p.w4.transpose() * x + p.b4).cwiseMax(0.0);
    CHECK((fs.feature[0] - phi).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("analytic gradients match central differences") {
    const Graph g = star_with_tail();
    const BinForest f = binarize(build_forest(g, 1, false));
    const EncoderDims dims = small_dims(1);
    const EncoderParams p = EncoderParams::seeded(dims, 77);

    ForestEncoder enc(f, g, p);
    enc.forward();

    SUBCASE("state-sum loss") {
        CHECK(gradcheck(f, g, p, enc.grad_state_sum(), state_loss, 1e-4) == 0);
    }
    SUBCASE("feature-sum loss") {
        CHECK(gradcheck(f, g, p, enc.grad_feature_sum(), feature_loss, 1e-4) == 0);
    }
}

TEST_CASE("gradients flow through multi-child folds on a wider forest") {
    const Graph g = testutil::amr_graph();
    const BinForest f = binarize(build_forest(g, 2, true));
    EncoderDims dims = small_dims(2);
    const EncoderParams p = EncoderParams::seeded(dims, 78);

    ForestEncoder enc(f, g, p);
    enc.forward();
    CHECK(gradcheck(f, g, p, enc.grad_feature_sum(), feature_loss, 1e-4) == 0);
}
