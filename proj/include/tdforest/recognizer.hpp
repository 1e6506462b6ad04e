#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "tdforest/graph.hpp"
#include "tdforest/vertex_set.hpp"

namespace tdforest {

// Rooted tree decomposition: bags[i] is the bag of node i, arcs are
// (parent, child) pairs, root indexes the top bag.  Width = max bag size - 1.
struct TreeDecomposition {
    std::vector<VertexSet> bags;
    std::vector<std::pair<int, int>> arcs;
    int root = 0;

    int width() const {
        int w = -1;
        for (VertexSet b : bags) w = std::max(w, b.count() - 1);
        return w;
    }
};

// Result of checking a decomposition against the three defining properties.
// `structural_error` is set when the arcs are not a tree rooted at `root`;
// the property lists are only meaningful when it is empty.
struct TdValidation {
    std::optional<std::string> structural_error;
    std::vector<int> uncovered_vertices;                // vertex-cover failures
    std::vector<std::pair<int, int>> uncovered_edges;   // skeleton edges in no bag
    std::vector<int> running_intersection_violations;   // vertices with split bag sets
    int width = -1;

    bool valid() const {
        return !structural_error && uncovered_vertices.empty() && uncovered_edges.empty() &&
               running_intersection_violations.empty();
    }
};

// Memo for the width-k recognition search, keyed by (separator, component).
// One table per width; widths are searched independently.
struct DecompMemo {
    struct KeyHash {
        std::size_t operator()(const std::pair<std::uint64_t, std::uint64_t>& k) const {
            // splitmix-style mix of the two masks
            std::uint64_t h = k.first * 0x9e3779b97f4a7c15ULL ^ (k.second + 0x7f4a7c15ULL);
            h ^= h >> 31;
            h *= 0xbf58476d1ce4e5b9ULL;
            h ^= h >> 27;
            return static_cast<std::size_t>(h);
        }
    };
    std::unordered_map<std::pair<std::uint64_t, std::uint64_t>, bool, KeyHash> table;
};

// Vertices of s adjacent to c.
VertexSet neighbors_in(const Skeleton& skel, VertexSet s, VertexSet c);

// True iff the subgraph hanging off component c (with separator s already
// placed) admits a rooted tree decomposition of width <= width whose root bag
// contains the interface neighbors_in(s, c).  Requires s ∩ c = ∅.
bool decomp(const Skeleton& skel, VertexSet s, VertexSet c, int width, DecompMemo& memo);

// Exact treewidth, or nullopt if it exceeds max_width.  Each skeleton
// component is solved independently; the result is the max.
std::optional<int> treewidth(const Graph& g, int max_width);
std::optional<int> treewidth(const Skeleton& skel, int max_width);

// Checks the vertex-cover, edge-cover, and running-intersection properties of
// td against g, after verifying the arcs form a tree rooted at td.root.
TdValidation validate_td(const Graph& g, const TreeDecomposition& td);

}  // namespace tdforest
