#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include "tdforest/forest.hpp"
#include "tdforest/graph.hpp"
#include "tdforest/oracle.hpp"

namespace testutil {

using tdforest::Edge;
using tdforest::Graph;

inline Graph make_graph(int n, const std::vector<std::tuple<int, int, std::string>>& edges,
                        std::optional<int> root = std::nullopt) {
    Graph g;
    for (int v = 0; v < n; ++v) {
        g.labels.push_back("v" + std::to_string(v));
        g.orig_ids.push_back(v);
    }
    std::map<std::pair<int, int>, int> occ;
    for (const auto& [src, dst, label] : edges)
        g.edges.push_back({src, dst, label, occ[{src, dst}]++});
    g.root = root;
    return g;
}

inline Graph path_graph(int n) {
    std::vector<std::tuple<int, int, std::string>> edges;
    for (int v = 0; v + 1 < n; ++v) edges.emplace_back(v, v + 1, "next");
    return make_graph(n, edges, 0);
}

inline Graph cycle_graph(int n) {
    std::vector<std::tuple<int, int, std::string>> edges;
    for (int v = 0; v < n; ++v) edges.emplace_back(v, (v + 1) % n, "next");
    return make_graph(n, edges, 0);
}

inline Graph complete_graph(int n) {
    std::vector<std::tuple<int, int, std::string>> edges;
    for (int u = 0; u < n; ++u)
        for (int v = u + 1; v < n; ++v) edges.emplace_back(u, v, "e");
    return make_graph(n, edges, 0);
}

inline Graph grid_graph(int rows, int cols) {
    std::vector<std::tuple<int, int, std::string>> edges;
    auto id = [cols](int r, int c) { return r * cols + c; };
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
            if (c + 1 < cols) edges.emplace_back(id(r, c), id(r, c + 1), "right");
            if (r + 1 < rows) edges.emplace_back(id(r, c), id(r + 1, c), "down");
        }
    return make_graph(rows * cols, edges, 0);
}

inline Graph star_graph(int leaves) {
    std::vector<std::tuple<int, int, std::string>> edges;
    for (int v = 1; v <= leaves; ++v) edges.emplace_back(0, v, "arm");
    return make_graph(leaves + 1, edges, 0);
}

// The six-vertex running example: instance "c" of a concept whose agent "g"
// is reentrant through two paths.
inline Graph amr_graph() {
    return make_graph(6,
                      {
                          {0, 2, "arg2"},    // c -> h
                          {2, 1, "arg1-of"}, // h -> g
                          {2, 4, "arg1"},    // h -> p
                          {4, 5, "arg2"},    // p -> t
                          {2, 3, "arg0"},    // h -> y
                          {5, 3, "arg0"},    // t -> y
                      },
                      0);
}

// Random connected labeled digraph: a random spanning tree with random edge
// directions plus a few extras.  Deterministic for a given generator state.
inline Graph random_connected(std::mt19937_64& rng, int n, int extra_percent = 15) {
    const std::vector<std::string> pool{"a", "b", "c", "d"};
    std::vector<std::tuple<int, int, std::string>> edges;
    std::map<std::pair<int, int>, bool> used;
    for (int v = 1; v < n; ++v) {
        const int other = static_cast<int>(rng() % static_cast<std::uint64_t>(v));
        const bool flip = rng() % 2 == 0;
        const int src = flip ? v : other;
        const int dst = flip ? other : v;
        edges.emplace_back(src, dst, pool[rng() % pool.size()]);
        used[{src, dst}] = true;
    }
    for (int u = 0; u < n; ++u)
        for (int v = 0; v < n; ++v) {
            if (u == v || used.count({u, v})) continue;
            if (static_cast<int>(rng() % 100) < extra_percent) {
                edges.emplace_back(u, v, pool[rng() % pool.size()]);
                used[{u, v}] = true;
            }
        }
    return make_graph(n, edges, 0);
}

// Sorted canonical codes of every tree in the forest.
inline std::vector<std::string> forest_codes(const tdforest::Forest& f, std::size_t limit) {
    std::vector<std::string> codes;
    for (const tdforest::TreeDecomposition& td : tdforest::enumerate_trees(f, limit))
        codes.push_back(tdforest::canonical_td_code(td));
    std::sort(codes.begin(), codes.end());
    return codes;
}

}  // namespace testutil
