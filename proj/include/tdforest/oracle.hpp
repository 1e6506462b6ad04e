#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "tdforest/forest.hpp"
#include "tdforest/graph.hpp"
#include "tdforest/recognizer.hpp"

namespace tdforest {

// Reference implementations used to cross-check the packed-forest machinery.
// Everything here is deliberately unshared and exponential; callers keep the
// inputs tiny.

// Canonical string for a rooted decomposition tree: sorted bag contents plus
// recursively sorted child codes, so two trees compare equal iff they are the
// same rooted tree up to sibling order.
std::string canonical_td_code(const TreeDecomposition& td);

// Every rooted tree decomposition of width <= width that bag-extension
// recursion can generate, enumerated without any sharing, validated, and
// returned as sorted canonical codes (duplicates would signal a bug and
// throw).  Limited to n <= 7 vertices.  A tree growing past max_bags or the
// enumeration passing tree_budget throws BudgetExceededError.
std::vector<std::string> brute_force_tds(const Graph& g, int width, int max_bags,
                                         bool root_constrained = false,
                                         std::size_t tree_budget = 500'000);

// Smallest width admitting a decomposition, decided by the same raw
// recursion with no memo table; nullopt above max_width.  n <= 7.
std::optional<int> oracle_treewidth(const Graph& g, int max_width);

// Expected per-node occurrence counts and per-derivation usage counts,
// computed by enumerating every complete derivation tree with its
// probability (product of chosen weights).  Throws BudgetExceededError past
// max_trees.
struct BruteMarginals {
    std::vector<double> node;
    std::vector<std::vector<double>> message;
};
BruteMarginals brute_force_marginals(const BinForest& f,
                                     const std::vector<std::vector<double>>& weights,
                                     std::size_t max_trees = 100'000);

}  // namespace tdforest
