#pragma once

#include <optional>
#include <set>
#include <utility>
#include <vector>

#include "nbs/graph.hpp"

namespace nbs {

/// One round of the leaf-peeling process: the nodes whose remaining degree
/// dropped to <= 1 at this round, plus the still-present edges they carry.
struct ShellLayer {
    std::vector<int> nodes;
    std::vector<std::pair<int, int>> edges;  // (u, v) with u < v
};

/// Decomposition of a graph into its 1-shell (organized in peel layers) and
/// its 2-core. Layer 1 holds the leaves of G and their edges; each later
/// layer holds the nodes whose degree drops to <= 1 once the previous layers
/// are removed. What survives is the 2-core (empty exactly for trees).
class ShellDecomposition {
public:
    explicit ShellDecomposition(const Graph& g) : g_(g) {
        const int n = g.num_nodes();
        std::vector<int> deg(n);
        for (int u = 0; u < n; ++u) deg[u] = g.degree(u);
        peel_round_.assign(n, 0);

        n1_ = 0;
        for (int u = 0; u < n; ++u)
            if (deg[u] == 1) ++n1_;

        int round = 0;
        std::vector<int> frontier;
        for (int u = 0; u < n; ++u)
            if (deg[u] <= 1) frontier.push_back(u);
        while (!frontier.empty()) {
            ++round;
            ShellLayer layer;
            layer.nodes = frontier;
            std::set<std::pair<int, int>> edges;
            for (int u : frontier) peel_round_[u] = round;
            for (int u : frontier)
                for (int v : g.neighbors(u))
                    if (peel_round_[v] == 0 || peel_round_[v] == round)
                        edges.insert(std::pair<int, int>(std::minmax(u, v)));
            layer.edges.assign(edges.begin(), edges.end());
            layers_.push_back(std::move(layer));

            std::vector<int> next;
            for (int u : frontier)
                for (int v : g.neighbors(u))
                    if (peel_round_[v] == 0 && --deg[v] == 1) next.push_back(v);
            std::sort(next.begin(), next.end());
            next.erase(std::unique(next.begin(), next.end()), next.end());
            // A node can reach remaining degree 0 without ever passing
            // through 1 only if it started there, which connectivity rules
            // out; nodes dropping below 1 were already collected.
            frontier = std::move(next);
        }

        s1_ = 0;
        for (const auto& l : layers_) s1_ += static_cast<int>(l.nodes.size());
        for (int u = 0; u < n; ++u)
            if (peel_round_[u] == 0) two_core_nodes_.push_back(u);
    }

    const Graph& graph() const { return g_; }
    const std::vector<ShellLayer>& layers() const { return layers_; }

    /// Number of 1-shell nodes (all nodes removed by peeling).
    int s1() const { return s1_; }
    /// Number of degree-1 nodes of the original graph.
    int n1() const { return n1_; }

    /// Peel round of a node (1-based); 0 means the node is in the 2-core.
    int peel_round(int u) const { return peel_round_[u]; }

    const std::vector<int>& two_core_nodes() const { return two_core_nodes_; }
    bool two_core_empty() const { return two_core_nodes_.empty(); }

    /// The 2-core as a graph of its own, or nullopt for trees. The returned
    /// graph's original_labels() map its dense ids back to node ids in g.
    std::optional<Graph> two_core() const {
        if (two_core_empty()) return std::nullopt;
        std::vector<std::pair<std::int64_t, std::int64_t>> edges;
        for (const auto& [u, v] : g_.undirected_edges())
            if (peel_round_[u] == 0 && peel_round_[v] == 0) edges.emplace_back(u, v);
        return Graph::from_edges(edges);
    }

    /// Per oriented edge i->j: the least ell >= 1 such that applying the
    /// edge-shift operator ell times to the indicator of i->j gives zero, or
    /// 0 if it never does. Finite exactly for edges pointing away from the
    /// 2-core into the 1-shell (every oriented edge of a tree is finite).
    /// Defined recursively: ell = 1 when j is a leaf, otherwise 1 + the
    /// maximum over the continuations j->k, k != i.
    std::vector<int> edge_kernel_layers() const {
        std::vector<int> memo(g_.num_oriented(), kUnknown);
        std::vector<int> out(g_.num_oriented());
        for (int e = 0; e < g_.num_oriented(); ++e) out[e] = layer_of(e, memo);
        for (int& x : out)
            if (x == kInfinite) x = 0;
        return out;
    }

private:
    static constexpr int kUnknown = -1;
    static constexpr int kInProgress = -2;
    static constexpr int kInfinite = -3;

    int layer_of(int e, std::vector<int>& memo) const {
        if (memo[e] == kInProgress) return kInfinite;  // ran into a cycle
        if (memo[e] != kUnknown) return memo[e];
        memo[e] = kInProgress;
        auto [i, j] = g_.edge(e);
        int result;
        if (g_.degree(j) == 1) {
            result = 1;
        } else {
            int worst = 0;
            for (int k : g_.neighbors(j)) {
                if (k == i) continue;
                int sub = layer_of(g_.edge_index(j, k), memo);
                if (sub == kInfinite) {
                    worst = kInfinite;
                    break;
                }
                worst = std::max(worst, sub);
            }
            result = (worst == kInfinite) ? kInfinite : worst + 1;
        }
        memo[e] = result;
        return result;
    }

    Graph g_;
    std::vector<ShellLayer> layers_;
    std::vector<int> peel_round_;
    std::vector<int> two_core_nodes_;
    int s1_ = 0;
    int n1_ = 0;
};

}  // namespace nbs
