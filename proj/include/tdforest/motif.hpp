#pragma once

#include <cstdint>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "tdforest/graph.hpp"
#include "tdforest/vertex_set.hpp"

namespace tdforest {

// Canonical form of the directed, unlabeled subgraph a bag induces: the
// lexicographically smallest row-major adjacency bit matrix over all
// orderings of the bag's vertices, prefixed with the bag size.  Two bags get
// the same code iff their induced digraphs are isomorphic.
struct MotifCode {
    std::string bytes;

    bool operator==(const MotifCode&) const = default;
    std::string hex() const;
};

struct MotifId {
    MotifCode code;
    int index = 0;  // intern index; 0 is reserved for the empty bag
};

// Canonical vertex order of a bag: the permutation minimizing the adjacency
// bits, with edge-label strings breaking ties among structure-equal
// orderings.  The encoder uses this as its slot order so states do not
// depend on how the input happened to number its vertices.
struct CanonicalBag {
    std::vector<int> order;  // bag vertices, canonical first-to-last
    MotifCode code;          // structural part only (labels never enter)
};

// Throws Error for bags larger than 5 vertices (orderings are enumerated
// exhaustively, 5! = 120).
CanonicalBag canonical_bag(const Graph& g, VertexSet bag);

// Thread-safe registry assigning dense indices to motif codes in first-seen
// order.  The empty bag is pre-interned as index 0.
class MotifInterner {
  public:
    MotifInterner();
    MotifId intern(const MotifCode& code);
    // Snapshot of (code, index) pairs ordered by index.
    std::vector<MotifId> entries() const;

  private:
    mutable std::mutex mu_;
    std::unordered_map<std::string, int> by_code_;
    std::vector<MotifCode> codes_;
};

// Convenience: canonicalize and intern in one step.
MotifId canonical_form(const Graph& g, VertexSet bag, MotifInterner& interner);

// FNV-1a of a byte string; used to map motif codes and label strings onto
// embedding rows without depending on intern order.
std::uint64_t fnv1a(const std::string& bytes);

}  // namespace tdforest
