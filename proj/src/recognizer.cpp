#include "tdforest/recognizer.hpp"

#include <algorithm>

#include "tdforest/errors.hpp"

namespace tdforest {

VertexSet neighbors_in(const Skeleton& skel, VertexSet s, VertexSet c) {
    VertexSet nb;
    for_each_vertex(c, [&](int v) { nb |= skel.adj[static_cast<std::size_t>(v)]; });
    return nb & s;
}

bool decomp(const Skeleton& skel, VertexSet s, VertexSet c, int width, DecompMemo& memo) {
    const VertexSet interface = neighbors_in(skel, s, c);
    const VertexSet closure = interface | c;
    if (closure.count() <= width + 1) return true;  // base case: one bag covers the rest

    auto key = std::make_pair(s.bits, c.bits);
    if (auto it = memo.table.find(key); it != memo.table.end()) return it->second;
    memo.table.emplace(key, false);  // guards against re-entry; components shrink anyway

    bool ok = false;
    const int room = width + 1 - interface.count();
    // Candidate next bags: the interface plus 1..room vertices of c.
    for (int extra = 1; extra <= room && !ok; ++extra) {
        for_each_subset_of_size(c, extra, [&](VertexSet added) {
            if (ok) return;
            const VertexSet bag = interface | added;
            bool all = true;
            for (VertexSet sub : components_after_removal(skel, bag, c)) {
                if (!decomp(skel, bag, sub, width, memo)) {
                    all = false;
                    break;
                }
            }
            if (all) ok = true;
        });
    }
    memo.table[key] = ok;
    return ok;
}

std::optional<int> treewidth(const Skeleton& skel, int max_width) {
    std::vector<VertexSet> comps = components_after_removal(skel, VertexSet{});
    int result = 0;
    for (VertexSet comp : comps) {
        int w = -1;
        for (int cand = 0; cand <= max_width; ++cand) {
            DecompMemo memo;  // memo entries are only valid within one width
            if (decomp(skel, VertexSet{}, comp, cand, memo)) {
                w = cand;
                break;
            }
        }
        if (w < 0) return std::nullopt;
        result = std::max(result, w);
    }
    return result;
}

std::optional<int> treewidth(const Graph& g, int max_width) {
    return treewidth(undirected_skeleton(g), max_width);
}

TdValidation validate_td(const Graph& g, const TreeDecomposition& td) {
    TdValidation out;
    const int nodes = static_cast<int>(td.bags.size());
    out.width = td.width();

    // --- structural checks: arcs must form a tree rooted at td.root ---
    if (nodes == 0) {
        out.structural_error = "decomposition has no bags";
        return out;
    }
    if (td.root < 0 || td.root >= nodes) {
        out.structural_error = "root index out of range";
        return out;
    }
    std::vector<int> parent(static_cast<std::size_t>(nodes), -1);
    std::vector<std::vector<int>> children(static_cast<std::size_t>(nodes));
    for (auto [p, c] : td.arcs) {
        if (p < 0 || p >= nodes || c < 0 || c >= nodes) {
            out.structural_error = "arc endpoint out of range";
            return out;
        }
        if (parent[static_cast<std::size_t>(c)] != -1) {
            out.structural_error = "node " + std::to_string(c) + " has two parents";
            return out;
        }
        parent[static_cast<std::size_t>(c)] = p;
        children[static_cast<std::size_t>(p)].push_back(c);
    }
    if (parent[static_cast<std::size_t>(td.root)] != -1) {
        out.structural_error = "root has a parent";
        return out;
    }
    // Reachability from the root covers everything iff arcs form a tree
    // (n-1 arcs, single parent each, no cycles).
    std::vector<char> seen(static_cast<std::size_t>(nodes), 0);
    std::vector<int> stack{td.root};
    seen[static_cast<std::size_t>(td.root)] = 1;
    int reached = 0;
    while (!stack.empty()) {
        int v = stack.back();
        stack.pop_back();
        ++reached;
        for (int c : children[static_cast<std::size_t>(v)]) {
            if (seen[static_cast<std::size_t>(c)]) {
                out.structural_error = "arc cycle through node " + std::to_string(c);
                return out;
            }
            seen[static_cast<std::size_t>(c)] = 1;
            stack.push_back(c);
        }
    }
    if (reached != nodes) {
        out.structural_error = "arcs do not connect all bags to the root";
        return out;
    }

    // --- property 1: every vertex in some bag ---
    VertexSet covered;
    for (VertexSet b : td.bags) covered |= b;
    for (int v = 0; v < g.n(); ++v)
        if (!covered.contains(v)) out.uncovered_vertices.push_back(v);

    // --- property 2: every skeleton edge inside some bag ---
    const Skeleton skel = undirected_skeleton(g);
    for (int u = 0; u < skel.n; ++u) {
        for_each_vertex(skel.adj[static_cast<std::size_t>(u)], [&](int v) {
            if (v <= u) return;  // each undirected pair once
            bool ok = false;
            for (VertexSet b : td.bags)
                if (b.contains(u) && b.contains(v)) {
                    ok = true;
                    break;
                }
            if (!ok) out.uncovered_edges.emplace_back(u, v);
        });
    }

    // --- property 3: bags holding a given vertex form a connected subtree ---
    for (int v = 0; v < g.n(); ++v) {
        int occupied = 0;
        for (VertexSet b : td.bags)
            if (b.contains(v)) ++occupied;
        if (occupied == 0) continue;  // already reported as uncovered
        // Count the connected pieces: a bag starts a new piece unless its
        // parent also holds v.
        int pieces = 0;
        for (int i = 0; i < nodes; ++i) {
            if (!td.bags[static_cast<std::size_t>(i)].contains(v)) continue;
            int p = parent[static_cast<std::size_t>(i)];
            if (p == -1 || !td.bags[static_cast<std::size_t>(p)].contains(v)) ++pieces;
        }
        if (pieces > 1) out.running_intersection_violations.push_back(v);
    }
    return out;
}

}  // namespace tdforest
