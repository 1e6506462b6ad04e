#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tdforest/vertex_set.hpp"

namespace tdforest {

// One directed, labeled edge.  `occ` disambiguates parallel edges with the
// same (src, dst): 0 for the first occurrence in input order, 1 for the next,
// and so on.  Feature output is keyed by (src, dst, occ).
struct Edge {
    int src = 0;
    int dst = 0;
    std::string label;
    int occ = 0;
};

// Directed labeled multigraph with an optional designated root vertex.
// Vertices are dense indices 0..n-1 after parsing; `orig_ids` remembers the
// ids the input used so emitted JSON can refer back to them.
struct Graph {
    std::vector<std::string> labels;    // per vertex
    std::vector<long long> orig_ids;    // per vertex, input id
    std::vector<Edge> edges;
    std::optional<int> root;            // dense index

    int n() const { return static_cast<int>(labels.size()); }
    int m() const { return static_cast<int>(edges.size()); }
};

// Undirected view used by all decomposition machinery: direction and labels
// dropped, parallels collapsed, self-loops removed.  Adjacency is one
// VertexSet per vertex, so neighborhood queries are single AND/ORs.
// Only graphs with n <= 64 can be converted.
struct Skeleton {
    int n = 0;
    std::vector<VertexSet> adj;

    VertexSet vertices() const { return VertexSet::first_n(n); }

    // Union of neighborhoods of `s`, minus `s` itself.
    VertexSet boundary(VertexSet s) const {
        VertexSet nb;
        for_each_vertex(s, [&](int v) { nb |= adj[static_cast<std::size_t>(v)]; });
        return nb - s;
    }
};

struct GraphStats {
    int n_vertices = 0;
    int n_edges = 0;
    int reentrancy_count = 0;          // vertices with directed in-degree > 1
    int diameter = 0;                  // max shortest-path over connected pairs
    bool diameter_infinite = false;    // set when the skeleton is disconnected
    std::optional<int> treewidth;      // absent if above the cap or n > 64
};

// Throws GraphTooLargeError when g.n() > 64.
Skeleton undirected_skeleton(const Graph& g);

// Connected components of `skel` restricted to `within` after removing `s`,
// ordered by ascending lowest vertex.  Pass skel.vertices() for the whole
// graph.  Components never cross `s` by construction.
std::vector<VertexSet> components_after_removal(const Skeleton& skel, VertexSet s,
                                                VertexSet within);

inline std::vector<VertexSet> components_after_removal(const Skeleton& skel, VertexSet s) {
    return components_after_removal(skel, s, skel.vertices());
}

// Summary statistics.  Works for arbitrary n; treewidth is only attempted for
// n <= 64 and reported when it is <= max_width.
GraphStats graph_stats(const Graph& g, int max_width);

}  // namespace tdforest
