#include "tdforest/graph.hpp"

#include <algorithm>
#include <queue>

#include "tdforest/errors.hpp"
#include "tdforest/recognizer.hpp"

namespace tdforest {

Skeleton undirected_skeleton(const Graph& g) {
    if (g.n() > 64) throw GraphTooLargeError(g.n());
    Skeleton skel;
    skel.n = g.n();
    skel.adj.assign(static_cast<std::size_t>(skel.n), VertexSet{});
    for (const Edge& e : g.edges) {
        if (e.src == e.dst) continue;  // self-loops carry no skeleton edge
        skel.adj[static_cast<std::size_t>(e.src)].add(e.dst);
        skel.adj[static_cast<std::size_t>(e.dst)].add(e.src);
    }
    return skel;
}

std::vector<VertexSet> components_after_removal(const Skeleton& skel, VertexSet s,
                                                VertexSet within) {
    std::vector<VertexSet> comps;
    VertexSet todo = within - s;
    while (!todo.empty()) {
        // Grow from the lowest unvisited vertex; masked BFS over word-sized
        // adjacency, so each sweep is O(|comp|) word ops.
        VertexSet comp;
        VertexSet frontier = VertexSet::single(todo.lowest());
        while (!frontier.empty()) {
            comp |= frontier;
            VertexSet next;
            for_each_vertex(frontier,
                            [&](int v) { next |= skel.adj[static_cast<std::size_t>(v)]; });
            frontier = (next & todo) - comp;
        }
        comps.push_back(comp);
        todo = todo - comp;
    }
    // BFS seeds run in ascending-lowest order already, but make it explicit.
    std::sort(comps.begin(), comps.end(),
              [](VertexSet a, VertexSet b) { return a.lowest() < b.lowest(); });
    return comps;
}

namespace {

// Diameter over connected pairs via BFS from every vertex; also reports
// whether any pair is disconnected.  Adjacency lists so n is unbounded.
std::pair<int, bool> skeleton_diameter(const Graph& g) {
    const int n = g.n();
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
    for (const Edge& e : g.edges) {
        if (e.src == e.dst) continue;
        adj[static_cast<std::size_t>(e.src)].push_back(e.dst);
        adj[static_cast<std::size_t>(e.dst)].push_back(e.src);
    }
    int diameter = 0;
    bool disconnected = false;
    std::vector<int> dist(static_cast<std::size_t>(n));
    for (int s = 0; s < n; ++s) {
        std::fill(dist.begin(), dist.end(), -1);
        dist[static_cast<std::size_t>(s)] = 0;
        std::queue<int> q;
        q.push(s);
        int reached = 1;
        while (!q.empty()) {
            int v = q.front();
            q.pop();
            diameter = std::max(diameter, dist[static_cast<std::size_t>(v)]);
            for (int w : adj[static_cast<std::size_t>(v)]) {
                if (dist[static_cast<std::size_t>(w)] < 0) {
                    dist[static_cast<std::size_t>(w)] = dist[static_cast<std::size_t>(v)] + 1;
                    q.push(w);
                    ++reached;
                }
            }
        }
        if (reached < n) disconnected = true;
    }
    return {diameter, disconnected};
}

}  // namespace

GraphStats graph_stats(const Graph& g, int max_width) {
    GraphStats st;
    st.n_vertices = g.n();
    st.n_edges = g.m();

    std::vector<int> indeg(static_cast<std::size_t>(g.n()), 0);
    for (const Edge& e : g.edges) ++indeg[static_cast<std::size_t>(e.dst)];
    for (int d : indeg)
        if (d > 1) ++st.reentrancy_count;

    auto [diam, disconnected] = skeleton_diameter(g);
    st.diameter = diam;
    st.diameter_infinite = disconnected;

    if (g.n() <= 64) st.treewidth = treewidth(g, max_width);
    return st;
}

}  // namespace tdforest
