#pragma once

#include <Eigen/Dense>

#include <vector>

#include "tdforest/forest.hpp"
#include "tdforest/graph.hpp"

namespace tdforest {

// Marginals of the expected-tree pass: node[a] is the expected number of
// occurrences of node a in a random derivation tree (1 at the root), and
// message[a][r] = node[a] * weights[a][r], the mass flowing through
// derivation r to both of its children.
struct Marginals {
    std::vector<double> node;
    std::vector<std::vector<double>> message;
};

// Runs top-down over the forest; `weights` must hold one simplex per node
// with derivations.  Throws Error on cyclic child links.
Marginals marginals(const BinForest& f, const std::vector<std::vector<double>>& weights);

// Directed edges of g whose endpoints both lie in `bag` but not both in
// bag ∩ parent_bag — i.e. the relations first fully visible at this arc.
// Self-loops are never included.  Returns indices into g.edges, ascending.
std::vector<int> new_relations(VertexSet parent_bag, VertexSet bag, const Graph& g);

// Expected per-edge features, aligned with g.edges.  Self-loops keep
// weight 0 and an empty feature vector; every other edge of a connected
// covered graph accumulates a total weight of exactly one.
struct EdgeFeatureSet {
    std::vector<Eigen::VectorXd> feature;
    std::vector<double> weight;
};

}  // namespace tdforest
