#include "tdforest/expected_tree.hpp"

#include <deque>

#include "tdforest/errors.hpp"

namespace tdforest {

Marginals marginals(const BinForest& f, const std::vector<std::vector<double>>& weights) {
    const std::size_t n = f.nodes.size();
    if (weights.size() != n) throw Error("marginals: weights size does not match forest");
    for (std::size_t a = 0; a < n; ++a) {
        if (weights[a].size() != f.nodes[a].derivations.size())
            throw Error("marginals: weight count does not match derivations");
    }

    Marginals mg;
    mg.node.assign(n, 0.0);
    mg.message.resize(n);
    for (std::size_t a = 0; a < n; ++a) mg.message[a].assign(weights[a].size(), 0.0);

    // Kahn order over parent->child occurrences, so a node's mass is complete
    // before it forwards anything; leftovers mean a cycle.
    std::vector<int> indegree(n, 0);
    for (const BinForest::Node& node : f.nodes)
        for (const std::array<int, 2>& d : node.derivations)
            for (int kid : d) ++indegree[static_cast<std::size_t>(kid)];

    std::deque<int> ready;
    for (std::size_t a = 0; a < n; ++a)
        if (indegree[a] == 0) ready.push_back(static_cast<int>(a));

    mg.node[static_cast<std::size_t>(f.root)] = 1.0;
    std::size_t processed = 0;
    while (!ready.empty()) {
        const int a = ready.front();
        ready.pop_front();
        ++processed;
        const auto& ders = f.nodes[static_cast<std::size_t>(a)].derivations;
        for (std::size_t r = 0; r < ders.size(); ++r) {
            const double msg = mg.node[static_cast<std::size_t>(a)] * weights[static_cast<std::size_t>(a)][r];
            mg.message[static_cast<std::size_t>(a)][r] = msg;
            for (int kid : ders[r]) {
                mg.node[static_cast<std::size_t>(kid)] += msg;
                if (--indegree[static_cast<std::size_t>(kid)] == 0) ready.push_back(kid);
            }
        }
    }
    if (processed != n) throw Error("marginals: forest contains a cycle");
    return mg;
}

std::vector<int> new_relations(VertexSet parent_bag, VertexSet bag, const Graph& g) {
    std::vector<int> out;
    const VertexSet shared = parent_bag & bag;
    for (std::size_t e = 0; e < g.edges.size(); ++e) {
        const Edge& edge = g.edges[e];
        if (edge.src == edge.dst) continue;
        if (!bag.contains(edge.src) || !bag.contains(edge.dst)) continue;
        if (shared.contains(edge.src) && shared.contains(edge.dst)) continue;
        out.push_back(static_cast<int>(e));
    }
    return out;
}

}  // namespace tdforest
