#include "tdforest/oracle.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "tdforest/errors.hpp"

namespace tdforest {

namespace {

std::string code_of(const TreeDecomposition& td, const std::vector<std::vector<int>>& kids,
                    int node) {
    std::string out = "(";
    bool first = true;
    for_each_vertex(td.bags[static_cast<std::size_t>(node)], [&](int v) {
        if (!first) out += ',';
        first = false;
        out += std::to_string(v);
    });
    out += ';';
    std::vector<std::string> child_codes;
    for (int c : kids[static_cast<std::size_t>(node)]) child_codes.push_back(code_of(td, kids, c));
    std::sort(child_codes.begin(), child_codes.end());
    for (const std::string& c : child_codes) out += c;
    out += ')';
    return out;
}

// Fragment of a decomposition tree rooted at bag index 0.
struct SubTree {
    std::vector<VertexSet> bags;
    std::vector<std::pair<int, int>> arcs;
};

SubTree attach(VertexSet root_bag, const std::vector<const SubTree*>& children, int max_bags) {
    SubTree out;
    out.bags.push_back(root_bag);
    for (const SubTree* ch : children) {
        const int offset = static_cast<int>(out.bags.size());
        out.bags.insert(out.bags.end(), ch->bags.begin(), ch->bags.end());
        out.arcs.emplace_back(0, offset);
        for (const auto& [p, c] : ch->arcs) out.arcs.emplace_back(p + offset, c + offset);
    }
    if (static_cast<int>(out.bags.size()) > max_bags)
        throw BudgetExceededError("brute-force decomposition exceeded the bag budget");
    return out;
}

struct BruteEnv {
    const Skeleton& skel;
    int width;
    int max_bags;
    std::size_t tree_budget;
    std::size_t produced = 0;
};

// All decomposition subtrees for the subproblem (separator s, component c).
// Candidate root bags extend the interface by 1..room vertices of c; each
// remaining piece of c recurses independently and the results multiply.
std::vector<SubTree> brute_rec(BruteEnv& env, VertexSet s, VertexSet c) {
    const VertexSet interface = neighbors_in(env.skel, s, c);
    std::vector<SubTree> out;
    const int room = env.width + 1 - interface.count();
    for (int extra = 1; extra <= room; ++extra) {
        for_each_subset_of_size(c, extra, [&](VertexSet added) {
            const VertexSet bag = interface | added;
            std::vector<std::vector<SubTree>> child_lists;
            bool dead = false;
            for (VertexSet piece : components_after_removal(env.skel, bag, c)) {
                child_lists.push_back(brute_rec(env, bag, piece));
                if (child_lists.back().empty()) {
                    dead = true;
                    break;
                }
            }
            if (dead) return;
            // Odometer over one choice per child component.
            std::vector<std::size_t> pick(child_lists.size(), 0);
            while (true) {
                std::vector<const SubTree*> chosen;
                chosen.reserve(child_lists.size());
                for (std::size_t i = 0; i < child_lists.size(); ++i)
                    chosen.push_back(&child_lists[i][pick[i]]);
                if (++env.produced > env.tree_budget)
                    throw BudgetExceededError("brute-force decomposition enumeration too large");
                out.push_back(attach(bag, chosen, env.max_bags));
                std::size_t slot = child_lists.size();
                while (slot > 0) {
                    --slot;
                    if (++pick[slot] < child_lists[slot].size()) break;
                    pick[slot] = 0;
                    if (slot == 0) return;
                }
                if (child_lists.empty()) return;
            }
        });
    }
    return out;
}

bool exists_rec(const Skeleton& skel, VertexSet s, VertexSet c, int width) {
    const VertexSet interface = neighbors_in(skel, s, c);
    const int room = width + 1 - interface.count();
    bool found = false;
    for (int extra = 1; extra <= room && !found; ++extra) {
        for_each_subset_of_size(c, extra, [&](VertexSet added) {
            if (found) return;
            const VertexSet bag = interface | added;
            for (VertexSet piece : components_after_removal(skel, bag, c))
                if (!exists_rec(skel, bag, piece, width)) return;
            found = true;
        });
    }
    return found;
}

}  // namespace

std::string canonical_td_code(const TreeDecomposition& td) {
    std::vector<std::vector<int>> kids(td.bags.size());
    for (const auto& [p, c] : td.arcs) kids[static_cast<std::size_t>(p)].push_back(c);
    return code_of(td, kids, td.root);
}

std::vector<std::string> brute_force_tds(const Graph& g, int width, int max_bags,
                                         bool root_constrained, std::size_t tree_budget) {
    if (g.n() > 7) throw Error("brute-force enumeration is limited to 7 vertices");
    const Skeleton skel = undirected_skeleton(g);
    BruteEnv env{skel, width, max_bags, tree_budget};

    // Top-level bag filter for the component holding the graph root: the bag
    // must contain the root and both ends of one of its edges (vacuous for an
    // isolated root).
    VertexSet root_need;
    std::vector<VertexSet> root_pairs;
    if (root_constrained && g.root.has_value()) {
        root_need = VertexSet::single(*g.root);
        for (const Edge& e : g.edges)
            if (e.src == *g.root || e.dst == *g.root)
                root_pairs.push_back(VertexSet::single(e.src) | VertexSet::single(e.dst));
    }
    auto admissible_top = [&](VertexSet bag, VertexSet comp) {
        if (root_need.empty() || !comp.intersects(root_need)) return true;
        if (!root_need.subset_of(bag)) return false;
        if (root_pairs.empty()) return true;
        for (VertexSet pair : root_pairs)
            if (pair.subset_of(bag)) return true;
        return false;
    };

    std::vector<std::vector<SubTree>> per_comp;
    const std::vector<VertexSet> comps = components_after_removal(skel, VertexSet{});
    for (VertexSet comp : comps) {
        std::vector<SubTree> trees = brute_rec(env, VertexSet{}, comp);
        std::erase_if(trees, [&](const SubTree& t) { return !admissible_top(t.bags[0], comp); });
        per_comp.push_back(std::move(trees));
        if (per_comp.back().empty()) return {};
    }

    std::vector<TreeDecomposition> full;
    if (comps.size() == 1) {
        for (const SubTree& t : per_comp[0]) full.push_back({t.bags, t.arcs, 0});
    } else {
        // Disconnected input: join one tree per component under an empty bag,
        // mirroring the synthetic forest root.
        std::vector<std::size_t> pick(per_comp.size(), 0);
        while (true) {
            std::vector<const SubTree*> chosen;
            for (std::size_t i = 0; i < per_comp.size(); ++i) chosen.push_back(&per_comp[i][pick[i]]);
            const SubTree joined = attach(VertexSet{}, chosen, max_bags + 1);
            full.push_back({joined.bags, joined.arcs, 0});
            std::size_t slot = pick.size();
            bool done = true;
            while (slot > 0) {
                --slot;
                if (++pick[slot] < per_comp[slot].size()) {
                    done = false;
                    break;
                }
                pick[slot] = 0;
            }
            if (done) break;
        }
    }

    std::set<std::string> codes;
    for (const TreeDecomposition& td : full) {
        const TdValidation check = validate_td(g, td);
        if (!check.valid()) throw Error("brute-force enumeration produced an invalid decomposition");
        if (check.width > width) throw Error("brute-force enumeration exceeded the width bound");
        if (!codes.insert(canonical_td_code(td)).second)
            throw Error("brute-force enumeration produced a duplicate tree");
    }
    return {codes.begin(), codes.end()};
}

std::optional<int> oracle_treewidth(const Graph& g, int max_width) {
    if (g.n() > 7) throw Error("brute-force treewidth is limited to 7 vertices");
    const Skeleton skel = undirected_skeleton(g);
    const std::vector<VertexSet> comps = components_after_removal(skel, VertexSet{});
    for (int w = 0; w <= max_width; ++w) {
        bool ok = true;
        for (VertexSet comp : comps)
            if (!exists_rec(skel, VertexSet{}, comp, w)) {
                ok = false;
                break;
            }
        if (ok) return w;
    }
    return std::nullopt;
}

BruteMarginals brute_force_marginals(const BinForest& f,
                                     const std::vector<std::vector<double>>& weights,
                                     std::size_t max_trees) {
    const std::size_t n = f.nodes.size();
    BruteMarginals bm;
    bm.node.assign(n, 0.0);
    bm.message.resize(n);
    for (std::size_t a = 0; a < n; ++a) bm.message[a].assign(weights[a].size(), 0.0);

    std::vector<int> occ(n, 0);
    std::vector<std::vector<int>> msg_occ(n);
    for (std::size_t a = 0; a < n; ++a) msg_occ[a].assign(weights[a].size(), 0);

    std::size_t trees = 0;
    // Depth-first over one derivation choice per node occurrence; `agenda`
    // holds occurrences still waiting for a choice.
    std::vector<int> agenda{f.root};
    auto rec = [&](auto&& self, double prob) -> void {
        if (agenda.empty()) {
            if (++trees > max_trees)
                throw BudgetExceededError("brute-force marginals: too many derivation trees");
            for (std::size_t a = 0; a < n; ++a) {
                bm.node[a] += prob * occ[a];
                for (std::size_t r = 0; r < msg_occ[a].size(); ++r)
                    bm.message[a][r] += prob * msg_occ[a][r];
            }
            return;
        }
        const int a = agenda.back();
        agenda.pop_back();
        const auto ai = static_cast<std::size_t>(a);
        ++occ[ai];
        const auto& ders = f.nodes[ai].derivations;
        if (ders.empty()) {
            self(self, prob);
        } else {
            for (std::size_t r = 0; r < ders.size(); ++r) {
                ++msg_occ[ai][r];
                agenda.push_back(ders[r][0]);
                agenda.push_back(ders[r][1]);
                self(self, prob * weights[ai][r]);
                agenda.pop_back();
                agenda.pop_back();
                --msg_occ[ai][r];
            }
        }
        --occ[ai];
        agenda.push_back(a);
    };
    rec(rec, 1.0);
    return bm;
}

}  // namespace tdforest
