#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <queue>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace nbs {

/// Error raised while loading or validating a graph. `kind` distinguishes the
/// rejection reasons so callers (the CLI in particular) can map them to exit
/// codes without parsing the message.
class GraphError : public std::runtime_error {
public:
    enum class Kind { parse, self_loop, duplicate_edge, disconnected, too_small };

    GraphError(Kind k, const std::string& msg) : std::runtime_error(msg), kind(k) {}

    Kind kind;
};

/// One oriented edge u->v. Oriented edges are indexed 0..2m-1 in
/// lexicographic (src, tgt) order; this struct is the decoded form.
struct OrientedEdge {
    int src;
    int tgt;
};

/// Simple undirected connected graph, n >= 2 nodes labeled 0..n-1.
///
/// Immutable after construction. Node labels in the input may be arbitrary
/// integers; they are densified to 0..n-1 in increasing order and the
/// original labels are kept for reporting. Neighbor lists are sorted, which
/// fixes the canonical oriented-edge order used by every matrix in the
/// library: oriented edge (u,v) gets index offset(u) + rank of v in adj(u).
class Graph {
public:
    static Graph from_edges(const std::vector<std::pair<std::int64_t, std::int64_t>>& edges) {
        return Graph(edges);
    }

    /// Parse whitespace-separated integer pairs, one edge per line.
    /// '#' starts a comment; blank lines are ignored.
    static Graph from_text(const std::string& text) {
        std::vector<std::pair<std::int64_t, std::int64_t>> edges;
        std::istringstream in(text);
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            std::istringstream ls(line);
            std::int64_t u, v;
            if (!(ls >> u)) {
                std::istringstream probe(line);
                std::string tok;
                if (probe >> tok)
                    throw GraphError(GraphError::Kind::parse,
                                     "line " + std::to_string(lineno) + ": expected integer, got '" +
                                         tok + "'");
                continue;  // blank or comment-only line
            }
            if (!(ls >> v))
                throw GraphError(GraphError::Kind::parse,
                                 "line " + std::to_string(lineno) + ": expected two integers");
            std::string rest;
            if (ls >> rest)
                throw GraphError(GraphError::Kind::parse,
                                 "line " + std::to_string(lineno) + ": trailing token '" + rest + "'");
            edges.emplace_back(u, v);
        }
        return Graph(edges);
    }

    static Graph from_file(const std::string& path) {
        std::ifstream f(path);
        if (!f)
            throw GraphError(GraphError::Kind::parse, "cannot open '" + path + "'");
        std::ostringstream ss;
        ss << f.rdbuf();
        return from_text(ss.str());
    }

    int num_nodes() const { return n_; }
    int num_edges() const { return m_; }
    int num_oriented() const { return 2 * m_; }

    int degree(int u) const { return static_cast<int>(adj_[u].size()); }
    const std::vector<int>& neighbors(int u) const { return adj_[u]; }

    /// Undirected edges as (u, v) with u < v, lexicographically sorted.
    const std::vector<std::pair<int, int>>& undirected_edges() const { return undirected_; }

    OrientedEdge edge(int e) const { return {edge_src_[e], edge_tgt_[e]}; }

    /// Index of oriented edge u->v; u and v must be adjacent.
    int edge_index(int u, int v) const {
        const auto& a = adj_[u];
        auto it = std::lower_bound(a.begin(), a.end(), v);
        if (it == a.end() || *it != v)
            throw std::out_of_range("edge_index: no edge " + std::to_string(u) + "->" + std::to_string(v));
        return offset_[u] + static_cast<int>(it - a.begin());
    }

    /// Index of v->u given the index of u->v.
    int reverse(int e) const { return reverse_[e]; }

    bool has_edge(int u, int v) const {
        const auto& a = adj_[u];
        return std::binary_search(a.begin(), a.end(), v);
    }

    int min_degree() const {
        int d = degree(0);
        for (int u = 1; u < n_; ++u) d = std::min(d, degree(u));
        return d;
    }

    /// Minimum degree >= 2 (no 1-shell).
    bool is_md2() const { return min_degree() >= 2; }

    bool is_tree() const { return m_ == n_ - 1; }

    /// Connected with every degree exactly 2, i.e. a single cycle C_n.
    bool is_cycle_graph() const {
        for (int u = 0; u < n_; ++u)
            if (degree(u) != 2) return false;
        return true;
    }

    /// Labels as they appeared in the input, indexed by dense node id.
    const std::vector<std::int64_t>& original_labels() const { return labels_; }

    bool was_relabeled() const {
        for (int u = 0; u < n_; ++u)
            if (labels_[u] != u) return true;
        return false;
    }

private:
    explicit Graph(const std::vector<std::pair<std::int64_t, std::int64_t>>& raw_edges) {
        if (raw_edges.empty())
            throw GraphError(GraphError::Kind::too_small, "graph has no edges");

        std::set<std::int64_t> label_set;
        for (const auto& [u, v] : raw_edges) {
            if (u == v)
                throw GraphError(GraphError::Kind::self_loop,
                                 "self-loop at node " + std::to_string(u));
            label_set.insert(u);
            label_set.insert(v);
        }
        labels_.assign(label_set.begin(), label_set.end());
        n_ = static_cast<int>(labels_.size());
        if (n_ < 2)
            throw GraphError(GraphError::Kind::too_small, "graph needs at least 2 nodes");

        std::map<std::int64_t, int> dense;
        for (int i = 0; i < n_; ++i) dense[labels_[i]] = i;

        std::set<std::pair<int, int>> seen;
        for (const auto& [lu, lv] : raw_edges) {
            int u = dense[lu], v = dense[lv];
            std::pair<int, int> key = std::minmax(u, v);
            if (!seen.insert(key).second)
                throw GraphError(GraphError::Kind::duplicate_edge,
                                 "duplicate edge " + std::to_string(lu) + " " + std::to_string(lv));
        }
        undirected_.assign(seen.begin(), seen.end());
        m_ = static_cast<int>(undirected_.size());

        adj_.assign(n_, {});
        for (const auto& [u, v] : undirected_) {
            adj_[u].push_back(v);
            adj_[v].push_back(u);
        }
        for (auto& a : adj_) std::sort(a.begin(), a.end());

        offset_.assign(n_ + 1, 0);
        for (int u = 0; u < n_; ++u) offset_[u + 1] = offset_[u] + degree(u);
        edge_src_.resize(2 * m_);
        edge_tgt_.resize(2 * m_);
        for (int u = 0; u < n_; ++u)
            for (int i = 0; i < degree(u); ++i) {
                edge_src_[offset_[u] + i] = u;
                edge_tgt_[offset_[u] + i] = adj_[u][i];
            }
        reverse_.resize(2 * m_);
        for (int e = 0; e < 2 * m_; ++e) reverse_[e] = edge_index(edge_tgt_[e], edge_src_[e]);

        check_connected();
    }

    void check_connected() {
        std::vector<char> vis(n_, 0);
        std::queue<int> q;
        q.push(0);
        vis[0] = 1;
        int count = 1;
        while (!q.empty()) {
            int u = q.front();
            q.pop();
            for (int v : adj_[u])
                if (!vis[v]) {
                    vis[v] = 1;
                    ++count;
                    q.push(v);
                }
        }
        if (count != n_)
            throw GraphError(GraphError::Kind::disconnected,
                             "graph is disconnected (" + std::to_string(count) + " of " +
                                 std::to_string(n_) + " nodes reachable from node " +
                                 std::to_string(labels_[0]) + ")");
    }

    int n_ = 0;
    int m_ = 0;
    std::vector<std::int64_t> labels_;
    std::vector<std::vector<int>> adj_;
    std::vector<std::pair<int, int>> undirected_;
    std::vector<int> offset_;
    std::vector<int> edge_src_;
    std::vector<int> edge_tgt_;
    std::vector<int> reverse_;
};

/// BFS 2-coloring. If `side` is given it receives the 0/1 color per node
/// (meaningful only when the graph is bipartite).
inline bool is_bipartite(const Graph& g, std::vector<int>* side = nullptr) {
    std::vector<int> color(g.num_nodes(), -1);
    std::queue<int> q;
    color[0] = 0;
    q.push(0);
    bool ok = true;
    while (!q.empty() && ok) {
        int u = q.front();
        q.pop();
        for (int v : g.neighbors(u)) {
            if (color[v] < 0) {
                color[v] = 1 - color[u];
                q.push(v);
            } else if (color[v] == color[u]) {
                ok = false;
                break;
            }
        }
    }
    if (side) *side = color;
    return ok;
}

}  // namespace nbs
