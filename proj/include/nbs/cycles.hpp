#pragma once

#include <algorithm>
#include <numeric>
#include <queue>
#include <vector>

#include "nbs/errors.hpp"
#include "nbs/graph.hpp"

namespace nbs {

/// Index of the undirected edge {u, v} in g.undirected_edges().
inline int undirected_index(const Graph& g, int u, int v) {
    std::pair<int, int> key = std::minmax(u, v);
    const auto& edges = g.undirected_edges();
    auto it = std::lower_bound(edges.begin(), edges.end(), key);
    if (it == edges.end() || *it != key)
        throw std::out_of_range("undirected_index: no such edge");
    return static_cast<int>(it - edges.begin());
}

/// BFS spanning tree (rooted at node 0, neighbors visited in ascending
/// order) together with the fundamental cycles closed by the non-tree edges.
///
/// Each fundamental cycle is stored as the ordered node sequence
/// [u, v, ...] of the closed walk that first traverses its non-tree edge
/// u->v (u < v) and then returns to u through the tree; consecutive entries
/// are adjacent and the last entry is adjacent to u.
class CycleBasis {
public:
    explicit CycleBasis(const Graph& g) : g_(g) {
        const int n = g.num_nodes();
        parent_.assign(n, -1);
        depth_.assign(n, 0);
        std::vector<char> vis(n, 0);
        std::queue<int> q;
        vis[0] = 1;
        q.push(0);
        tree_edge_.assign(g.num_edges(), false);
        while (!q.empty()) {
            int u = q.front();
            q.pop();
            for (int v : g.neighbors(u))
                if (!vis[v]) {
                    vis[v] = 1;
                    parent_[v] = u;
                    depth_[v] = depth_[u] + 1;
                    tree_edge_[undirected_index(g, u, v)] = true;
                    q.push(v);
                }
        }
        for (const auto& [u, v] : g.undirected_edges())
            if (!tree_edge_[undirected_index(g, u, v)]) non_tree_edges_.emplace_back(u, v);

        for (const auto& [u, v] : non_tree_edges_) cycles_.push_back(close_cycle(u, v));
    }

    const std::vector<int>& parents() const { return parent_; }
    bool is_tree_edge(int u, int v) const { return tree_edge_[undirected_index(g_, u, v)]; }
    const std::vector<std::pair<int, int>>& non_tree_edges() const { return non_tree_edges_; }
    const std::vector<std::vector<int>>& fundamental_cycles() const { return cycles_; }

    /// Dimension of the cycle space, m - n + 1.
    int rank() const { return static_cast<int>(cycles_.size()); }

    static bool is_even(const std::vector<int>& cycle) { return cycle.size() % 2 == 0; }

private:
    std::vector<int> close_cycle(int u, int v) const {
        std::vector<int> up_u{u}, up_v{v};
        int a = u, b = v;
        while (depth_[a] > depth_[b]) up_u.push_back(a = parent_[a]);
        while (depth_[b] > depth_[a]) up_v.push_back(b = parent_[b]);
        while (a != b) {
            up_u.push_back(a = parent_[a]);
            up_v.push_back(b = parent_[b]);
        }
        // up_u = [u .. lca], up_v = [v .. lca]; walk u -> v -> ... -> lca -> ... -> u
        std::vector<int> cycle{u};
        cycle.insert(cycle.end(), up_v.begin(), up_v.end());       // v, ..., lca
        cycle.insert(cycle.end(), up_u.rbegin() + 1, up_u.rend() - 1);  // back down, exclusive
        return cycle;
    }

    Graph g_;
    std::vector<int> parent_;
    std::vector<int> depth_;
    std::vector<bool> tree_edge_;
    std::vector<std::pair<int, int>> non_tree_edges_;
    std::vector<std::vector<int>> cycles_;
};

/// Period of the oriented-edge shift digraph: the gcd of all its directed
/// cycle lengths, computed from BFS level discrepancies. Requires a graph
/// with min degree 2 and at least two independent cycles (there the shift
/// digraph is strongly connected). Trees and bare cycle graphs are rejected;
/// a cycle graph's shift digraph splits into two disjoint n-cycles and its
/// period-n case is handled by the caller as a special case.
inline int nb_period(const Graph& g) {
    if (g.is_tree())
        throw PreconditionError("nb_period: tree input (no cycles, period undefined)");
    if (g.is_cycle_graph())
        throw PreconditionError("nb_period: cycle graph (degenerate; period equals the girth n)");
    if (!g.is_md2())
        throw PreconditionError("nb_period: graph has degree-1 nodes; peel to the 2-core first");

    const int dim = g.num_oriented();
    std::vector<int> level(dim, -1);
    std::queue<int> q;
    level[0] = 0;
    q.push(0);
    while (!q.empty()) {
        int e = q.front();
        q.pop();
        auto [i, j] = g.edge(e);
        for (int k : g.neighbors(j)) {
            if (k == i) continue;
            int f = g.edge_index(j, k);
            if (level[f] < 0) {
                level[f] = level[e] + 1;
                q.push(f);
            }
        }
    }
    for (int e = 0; e < dim; ++e)
        if (level[e] < 0)
            throw NumericError("nb_period: oriented-edge digraph unexpectedly not strongly connected");

    int period = 0;
    for (int e = 0; e < dim; ++e) {
        auto [i, j] = g.edge(e);
        for (int k : g.neighbors(j)) {
            if (k == i) continue;
            int f = g.edge_index(j, k);
            period = std::gcd(period, std::abs(level[e] + 1 - level[f]));
        }
    }
    if (period == 0)
        throw NumericError("nb_period: no level discrepancy found, which contradicts strong connectivity");
    return period;
}

}  // namespace nbs
