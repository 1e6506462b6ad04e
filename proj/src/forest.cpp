#include "tdforest/forest.hpp"

#include <algorithm>
#include <cstdint>
#include <map>
#include <unordered_map>

#include "tdforest/errors.hpp"

namespace tdforest {

int compare_freq(const BagSizeFreq& a, const BagSizeFreq& b, FreqOrder order) {
    const std::size_t len = a.counts.size();
    if (order == FreqOrder::kLargeFirst) {
        for (std::size_t i = len; i-- > 0;) {
            if (a.counts[i] != b.counts[i]) return a.counts[i] < b.counts[i] ? -1 : 1;
        }
    } else {
        for (std::size_t i = 0; i < len; ++i) {
            if (a.counts[i] != b.counts[i]) return a.counts[i] < b.counts[i] ? -1 : 1;
        }
    }
    return 0;
}

namespace {

struct MaskPairHash {
    std::size_t operator()(const std::pair<std::uint64_t, std::uint64_t>& k) const {
        std::uint64_t h = k.first * 0x9e3779b97f4a7c15ULL ^ (k.second + 0x7f4a7c15ULL);
        h ^= h >> 31;
        h *= 0xbf58476d1ce4e5b9ULL;
        h ^= h >> 27;
        return static_cast<std::size_t>(h);
    }
};

class ForestBuilder {
  public:
    ForestBuilder(const Skeleton& skel, int width) : skel_(skel), width_(width) {}

    // All admissible nodes covering component C (interface implied by C).
    // Memoized: interior subproblems are fully determined by the component.
    const std::vector<int>& slot(VertexSet comp) {
        auto it = slot_memo_.find(comp.bits);
        if (it != slot_memo_.end()) return it->second;
        std::vector<int> options =
            expand_slot(comp, [](VertexSet) { return true; });
        return slot_memo_.emplace(comp.bits, std::move(options)).first->second;
    }

    // Same enumeration with a bag filter; used only for the top level, where
    // the root constraint may apply.  Not memoized — top components are never
    // revisited as interior subproblems because components shrink strictly.
    template <typename Pred>
    std::vector<int> expand_slot(VertexSet comp, Pred&& admissible) {
        const VertexSet interface = skel_.boundary(comp);
        std::vector<int> options;
        const int room = width_ + 1 - interface.count();
        for (int extra = 1; extra <= room; ++extra) {
            for_each_subset_of_size(comp, extra, [&](VertexSet added) {
                const VertexSet bag = interface | added;
                if (!admissible(bag)) return;
                int id = make_node(interface, comp, bag);
                if (id >= 0) options.push_back(id);
            });
        }
        return options;
    }

    std::vector<ForestNode> take_nodes() { return std::move(nodes_); }

  private:
    // Creates (or reuses) the node for (bag, comp); returns -1 when some
    // remaining component admits no bag, i.e. the choice is a dead end.
    int make_node(VertexSet interface, VertexSet comp, VertexSet bag) {
        auto key = std::make_pair(bag.bits, comp.bits);
        if (auto it = node_memo_.find(key); it != node_memo_.end()) return it->second;

        std::vector<std::vector<int>> child_options;
        for (VertexSet sub : components_after_removal(skel_, bag, comp)) {
            const std::vector<int>& opts = slot(sub);
            if (opts.empty()) {
                node_memo_.emplace(key, -1);
                return -1;
            }
            child_options.push_back(opts);
        }

        const int id = static_cast<int>(nodes_.size());
        nodes_.push_back(ForestNode{interface, comp, bag, {}});
        node_memo_.emplace(key, id);
        nodes_[static_cast<std::size_t>(id)].derivations = combine(child_options);
        return id;
    }

    // Cartesian product of per-component choices, last slot fastest, so
    // derivation order follows the (already deterministic) option order.
    static std::vector<Derivation> combine(const std::vector<std::vector<int>>& options) {
        std::vector<Derivation> out;
        if (options.empty()) return out;  // leaf
        std::size_t total = 1;
        for (const auto& o : options) total *= o.size();
        out.reserve(total);
        std::vector<std::size_t> idx(options.size(), 0);
        for (;;) {
            Derivation d;
            d.children.reserve(options.size());
            for (std::size_t i = 0; i < options.size(); ++i)
                d.children.push_back(options[i][idx[i]]);
            out.push_back(std::move(d));
            std::size_t pos = options.size();
            while (pos-- > 0) {
                if (++idx[pos] < options[pos].size()) break;
                idx[pos] = 0;
                if (pos == 0) return out;
            }
        }
    }

    const Skeleton& skel_;
    int width_;
    std::vector<ForestNode> nodes_;
    std::unordered_map<std::uint64_t, std::vector<int>> slot_memo_;
    std::unordered_map<std::pair<std::uint64_t, std::uint64_t>, int, MaskPairHash> node_memo_;
};

// Drops nodes unreachable from the root and renumbers the rest, preserving
// relative order (and thus determinism of node ids).
Forest compact(std::vector<ForestNode> nodes, int root, int n_vertices) {
    std::vector<char> keep(nodes.size(), 0);
    std::vector<int> stack{root};
    keep[static_cast<std::size_t>(root)] = 1;
    while (!stack.empty()) {
        int v = stack.back();
        stack.pop_back();
        for (const Derivation& d : nodes[static_cast<std::size_t>(v)].derivations)
            for (int c : d.children)
                if (!keep[static_cast<std::size_t>(c)]) {
                    keep[static_cast<std::size_t>(c)] = 1;
                    stack.push_back(c);
                }
    }
    std::vector<int> remap(nodes.size(), -1);
    Forest out;
    out.n_vertices = n_vertices;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (!keep[i]) continue;
        remap[i] = static_cast<int>(out.nodes.size());
        out.nodes.push_back(std::move(nodes[i]));
    }
    for (ForestNode& n : out.nodes)
        for (Derivation& d : n.derivations)
            for (int& c : d.children) c = remap[static_cast<std::size_t>(c)];
    out.root = remap[static_cast<std::size_t>(root)];
    return out;
}

}  // namespace

Forest build_forest(const Graph& g, int width, bool root_constrained) {
    const Skeleton skel = undirected_skeleton(g);
    ForestBuilder builder(skel, width);

    // Root admissibility: bag must hold the root vertex plus both endpoints
    // of some incident edge.  With no incident edges the edge clause is
    // vacuous.
    const bool constrain = root_constrained && g.root.has_value();
    std::vector<VertexSet> root_edges;
    if (constrain) {
        for (const Edge& e : g.edges) {
            if (e.src == *g.root || e.dst == *g.root) {
                VertexSet pair;
                pair.add(e.src);
                pair.add(e.dst);
                root_edges.push_back(pair);
            }
        }
    }
    auto admissible_root = [&](VertexSet bag) {
        if (!constrain) return true;
        if (!bag.contains(*g.root)) return false;
        if (root_edges.empty()) return true;
        for (VertexSet pair : root_edges)
            if (pair.subset_of(bag)) return true;
        return false;
    };

    const std::vector<VertexSet> comps = components_after_removal(skel, VertexSet{});
    std::vector<std::vector<int>> top_options;
    for (VertexSet comp : comps) {
        const bool holds_root = constrain && comp.contains(*g.root);
        std::vector<int> opts =
            holds_root ? builder.expand_slot(comp, admissible_root)
                       : builder.expand_slot(comp, [](VertexSet) { return true; });
        if (opts.empty()) throw WidthExceededError(width);
        top_options.push_back(std::move(opts));
    }

    std::vector<ForestNode> nodes = builder.take_nodes();
    int root;
    if (top_options.size() == 1 && top_options[0].size() == 1) {
        root = top_options[0][0];
    } else {
        // Synthetic empty-bag root; one derivation per combination of
        // top-level choices across components.
        root = static_cast<int>(nodes.size());
        ForestNode super{VertexSet{}, VertexSet::first_n(g.n()), VertexSet{}, {}};
        std::vector<std::size_t> idx(top_options.size(), 0);
        if (!top_options.empty()) {
            for (;;) {
                Derivation d;
                for (std::size_t i = 0; i < top_options.size(); ++i)
                    d.children.push_back(top_options[i][idx[i]]);
                super.derivations.push_back(std::move(d));
                std::size_t pos = top_options.size();
                bool done = true;
                while (pos-- > 0) {
                    if (++idx[pos] < top_options[pos].size()) {
                        done = false;
                        break;
                    }
                    idx[pos] = 0;
                }
                if (done) break;
            }
        }
        nodes.push_back(std::move(super));
    }
    return compact(std::move(nodes), root, g.n());
}

Forest prune_min_bags(const Forest& f, int width, FreqOrder order) {
    const std::size_t n = f.nodes.size();
    std::vector<BagSizeFreq> best(n);
    std::vector<char> done(n, 0);

    // Children strictly shrink components, so plain recursion terminates.
    auto solve = [&](auto&& self, int id) -> const BagSizeFreq& {
        if (done[static_cast<std::size_t>(id)]) return best[static_cast<std::size_t>(id)];
        const ForestNode& node = f.nodes[static_cast<std::size_t>(id)];
        BagSizeFreq own(width);
        own.counts.at(static_cast<std::size_t>(node.bag.count())) += 1;
        if (node.leaf()) {
            best[static_cast<std::size_t>(id)] = own;
        } else {
            std::optional<BagSizeFreq> winner;
            for (const Derivation& d : node.derivations) {
                BagSizeFreq total = own;
                for (int c : d.children) total += self(self, c);
                if (!winner || compare_freq(total, *winner, order) < 0) winner = total;
            }
            best[static_cast<std::size_t>(id)] = std::move(*winner);
        }
        done[static_cast<std::size_t>(id)] = 1;
        return best[static_cast<std::size_t>(id)];
    };
    solve(solve, f.root);
    for (std::size_t i = 0; i < n; ++i)
        if (!done[i]) solve(solve, static_cast<int>(i));

    std::vector<ForestNode> pruned = f.nodes;
    for (std::size_t i = 0; i < n; ++i) {
        ForestNode& node = pruned[i];
        if (node.leaf()) continue;
        BagSizeFreq own(width);
        own.counts.at(static_cast<std::size_t>(node.bag.count())) += 1;
        std::vector<Derivation> kept;
        for (const Derivation& d : node.derivations) {
            BagSizeFreq total = own;
            for (int c : d.children) total += best[static_cast<std::size_t>(c)];
            if (compare_freq(total, best[i], order) == 0) kept.push_back(d);
        }
        node.derivations = std::move(kept);  // argmin set is never empty
    }
    return compact(std::move(pruned), f.root, f.n_vertices);
}

BinForest binarize(const Forest& f) {
    BinForest out;
    out.root = f.root;
    out.nodes.resize(f.nodes.size());
    out.src_derivations.resize(f.nodes.size());
    for (std::size_t i = 0; i < f.nodes.size(); ++i) {
        out.nodes[i].bag = f.nodes[i].bag;
        out.nodes[i].src = static_cast<int>(i);
    }

    auto null_leaf = [&]() {
        if (out.null_id < 0) {
            out.null_id = static_cast<int>(out.nodes.size());
            BinForest::Node n;
            n.aux = true;
            n.null_leaf = true;
            out.nodes.push_back(std::move(n));
        }
        return out.null_id;
    };

    // Fold nodes are shared on their (left, right) pair, which keeps the
    // forest packed and leaves tree counts untouched.
    std::map<std::pair<int, int>, int> aux_memo;
    auto fold = [&](auto&& self, const std::vector<int>& tail, std::size_t from) -> int {
        // Returns a node standing for tail[from..]; precondition: >= 2 left.
        const int left = tail[from];
        const int right = (tail.size() - from == 2)
                              ? tail[from + 1]
                              : self(self, tail, from + 1);
        // (left, right) pairs that are a complete derivation of the original
        // node are handled by the caller; here we always need an aux node.
        auto key = std::make_pair(left, right);
        if (auto it = aux_memo.find(key); it != aux_memo.end()) return it->second;
        const int id = static_cast<int>(out.nodes.size());
        BinForest::Node n;
        n.aux = true;
        n.derivations.push_back({left, right});
        out.nodes.push_back(std::move(n));
        aux_memo.emplace(key, id);
        return id;
    };

    for (std::size_t i = 0; i < f.nodes.size(); ++i) {
        for (const Derivation& d : f.nodes[i].derivations) {
            out.src_derivations[i].push_back(d.children);
            std::array<int, 2> pair{};
            if (d.children.size() == 1) {
                pair = {d.children[0], null_leaf()};
            } else if (d.children.size() == 2) {
                pair = {d.children[0], d.children[1]};
            } else {
                pair = {d.children[0], fold(fold, d.children, 1)};
            }
            out.nodes[i].derivations.push_back(pair);
        }
    }
    return out;
}

namespace {

template <typename ForestT>
TreeCount count_trees_impl(const ForestT& f, int root,
                           const std::vector<std::vector<std::vector<int>>>& childs) {
    std::vector<TreeCount> memo(childs.size(), TreeCount(-1));
    auto rec = [&](auto&& self, int id) -> const TreeCount& {
        TreeCount& slot = memo[static_cast<std::size_t>(id)];
        if (slot >= 0) return slot;
        if (childs[static_cast<std::size_t>(id)].empty()) {
            slot = 1;
            return slot;
        }
        TreeCount total = 0;
        for (const std::vector<int>& d : childs[static_cast<std::size_t>(id)]) {
            TreeCount prod = 1;
            for (int c : d) prod *= self(self, c);
            total += prod;
        }
        slot = total;
        return slot;
    };
    (void)f;
    return rec(rec, root);
}

}  // namespace

TreeCount count_trees(const Forest& f) {
    std::vector<std::vector<std::vector<int>>> childs(f.nodes.size());
    for (std::size_t i = 0; i < f.nodes.size(); ++i)
        for (const Derivation& d : f.nodes[i].derivations) childs[i].push_back(d.children);
    return count_trees_impl(f, f.root, childs);
}

TreeCount count_trees(const BinForest& f) {
    std::vector<std::vector<std::vector<int>>> childs(f.nodes.size());
    for (std::size_t i = 0; i < f.nodes.size(); ++i)
        for (const auto& d : f.nodes[i].derivations)
            childs[i].push_back({d[0], d[1]});
    return count_trees_impl(f, f.root, childs);
}

std::vector<TreeDecomposition> enumerate_trees(const Forest& f, std::size_t limit) {
    std::vector<TreeDecomposition> out;
    if (limit == 0) return out;

    const ForestNode& root_node = f.nodes[static_cast<std::size_t>(f.root)];
    const bool strip_root = f.synthetic_root() && !root_node.leaf() &&
                            root_node.derivations.front().children.size() == 1;

    TreeDecomposition scratch;
    // Depth-first over derivation choices with an explicit agenda of
    // (forest node, parent bag index) pairs; bags/arcs are appended and
    // rolled back around each branch.
    auto rec = [&](auto&& self, std::vector<std::pair<int, int>>& agenda) -> bool {
        if (out.size() >= limit) return false;
        if (agenda.empty()) {
            out.push_back(scratch);
            return out.size() < limit;
        }
        auto [id, parent] = agenda.back();
        agenda.pop_back();
        const ForestNode& node = f.nodes[static_cast<std::size_t>(id)];
        const int my_index = static_cast<int>(scratch.bags.size());
        scratch.bags.push_back(node.bag);
        if (parent >= 0) scratch.arcs.emplace_back(parent, my_index);

        bool keep_going = true;
        if (node.leaf()) {
            keep_going = self(self, agenda);
        } else {
            for (const Derivation& d : node.derivations) {
                const std::size_t mark = agenda.size();
                // Push in reverse so children expand left-to-right.
                for (auto it = d.children.rbegin(); it != d.children.rend(); ++it)
                    agenda.emplace_back(*it, my_index);
                keep_going = self(self, agenda);
                agenda.resize(mark);
                if (!keep_going) break;
            }
        }

        scratch.bags.pop_back();
        if (parent >= 0) scratch.arcs.pop_back();
        agenda.emplace_back(id, parent);
        return keep_going;
    };

    std::vector<std::pair<int, int>> agenda;
    if (strip_root) {
        for (const Derivation& d : root_node.derivations) {
            agenda.assign(1, {d.children[0], -1});
            if (!rec(rec, agenda)) break;
        }
    } else {
        agenda.assign(1, {f.root, -1});
        rec(rec, agenda);
    }
    return out;
}

}  // namespace tdforest
