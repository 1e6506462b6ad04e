#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <array>
#include <optional>
#include <vector>

#include "tdforest/graph.hpp"
#include "tdforest/recognizer.hpp"
#include "tdforest/vertex_set.hpp"

namespace tdforest {

using TreeCount = boost::multiprecision::cpp_int;

// One way to expand a forest node: an ordered child per connected component
// of (component \ bag), components ordered by lowest vertex.
struct Derivation {
    std::vector<int> children;
};

// A packed-forest node: the bag chosen for `component`, whose neighbor
// interface is `interface` (= all vertices outside the component adjacent to
// it).  Nodes are shared: the same (bag, component) subproblem reached from
// different parents is stored once.  A node with no derivations is a leaf,
// which happens exactly when the bag covers the whole component.
struct ForestNode {
    VertexSet interface;
    VertexSet component;
    VertexSet bag;
    std::vector<Derivation> derivations;

    bool leaf() const { return derivations.empty(); }
};

// AND-OR forest over bag choices.  Each node's derivations are alternatives
// (OR); the children within one derivation are all required (AND).  The root
// is either the unique top-level node, or a synthetic empty-bag node whose
// derivations pick one top-level bag per graph component.  An empty bag only
// ever occurs at that synthetic root.
struct Forest {
    std::vector<ForestNode> nodes;
    int root = 0;
    int n_vertices = 0;  // of the source graph

    bool synthetic_root() const { return nodes[static_cast<std::size_t>(root)].bag.empty(); }

    std::size_t derivation_count() const {
        std::size_t total = 0;
        for (const ForestNode& n : nodes) total += n.derivations.size();
        return total;
    }
};

// Binarized view fed to the encoder: every derivation has exactly two
// children.  Original nodes keep their ids (0..k-1 as in the source forest);
// auxiliary fold nodes and the shared NULL padding leaf are appended after.
struct BinForest {
    struct Node {
        std::optional<VertexSet> bag;               // nullopt for aux / NULL
        bool aux = false;                           // fold node or NULL leaf
        bool null_leaf = false;
        std::vector<std::array<int, 2>> derivations;
        int src = -1;                               // source forest node, -1 for aux
    };
    std::vector<Node> nodes;
    int root = 0;
    int null_id = -1;  // -1 when no derivation needed padding

    // Original child lists per source node and derivation, in source order.
    // Derivation r of source node a folds into nodes[a].derivations[r], so
    // attention weights line up index-for-index.
    std::vector<std::vector<std::vector<int>>> src_derivations;

    std::size_t derivation_count() const {
        std::size_t total = 0;
        for (const Node& n : nodes) total += n.derivations.size();
        return total;
    }
};

// Ordering used when comparing bag-size frequency vectors.
enum class FreqOrder {
    kLargeFirst,  // fewer large bags wins (default)
    kSmallFirst,  // literal low-size-first lexicographic order
};

// Number of bags of each size 0..width+1 accumulated along a derivation
// choice; the pruning objective.
struct BagSizeFreq {
    std::vector<int> counts;

    explicit BagSizeFreq(int width) : counts(static_cast<std::size_t>(width) + 2, 0) {}
    BagSizeFreq() = default;

    BagSizeFreq& operator+=(const BagSizeFreq& o) {
        for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += o.counts[i];
        return *this;
    }
};

// Negative = a better than b, 0 = tie, positive = b better.
int compare_freq(const BagSizeFreq& a, const BagSizeFreq& b, FreqOrder order);

// Builds the packed forest of all rooted tree decompositions of width
// <= width.  With root_constrained set and g.root present, top-level bags
// must contain the root vertex and both endpoints of at least one edge
// incident to it (vacuous if the root has no incident edges).
// Throws WidthExceededError when no decomposition exists at this width and
// GraphTooLargeError for n > 64.
Forest build_forest(const Graph& g, int width, bool root_constrained);

// Keeps, at every node, only the derivations whose bag-size frequency vector
// (own bag plus best descendants) is minimal under `order`; then drops nodes
// that became unreachable.  Ties keep all tied derivations.
Forest prune_min_bags(const Forest& f, int width, FreqOrder order = FreqOrder::kLargeFirst);

// Right-folds every derivation with more than two children through auxiliary
// nodes and pads single-child derivations with the shared NULL leaf.
// Preserves the derivation-tree count exactly.
BinForest binarize(const Forest& f);

// All complete trees of the forest, depth-first over derivation choices, up
// to `limit`.  The synthetic root is stripped when its derivations have a
// single child (connected graphs); for disconnected graphs the empty bag
// stays and joins the per-component decompositions.
std::vector<TreeDecomposition> enumerate_trees(const Forest& f, std::size_t limit);

// Exact number of complete trees (can be astronomically large).
TreeCount count_trees(const Forest& f);
TreeCount count_trees(const BinForest& f);

}  // namespace tdforest
