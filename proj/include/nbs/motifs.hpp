#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "nbs/errors.hpp"
#include "nbs/graph.hpp"
#include "nbs/linalg.hpp"
#include "nbs/nb_matrix.hpp"

namespace nbs {

enum class MotifKind { pendant, collar, bracelet };

inline const char* to_string(MotifKind k) {
    switch (k) {
        case MotifKind::pendant: return "pendant";
        case MotifKind::collar: return "collar";
        default: return "bracelet";
    }
}

/// A cycle-shaped subgraph carrying unit eigenvalues. nodes lists the closed
/// traversal n_0, n_1, ..., n_{r-1} (edges n_i -- n_{i+1 mod r}); every node
/// on it has degree 2 except the anchors, which sit at position 0 and, for
/// bracelets and two-anchor collars, again at position r/2. A pendant is an
/// odd cycle hanging from one anchor; a collar is an even cycle with one or
/// two anchors; a bracelet is a figure-eight of two equal cycles at one
/// anchor (so its traversal visits the anchor twice). A graph that is one
/// single cycle is reported as a degenerate whole-graph motif with no anchor.
struct Motif {
    MotifKind kind = MotifKind::pendant;
    int size = 0;              // r, the number of edges traversed
    std::vector<int> nodes;    // traversal order, nodes[0] is the anchor
    std::vector<int> anchors;  // empty only for the whole-graph case
    bool whole_graph = false;
};

/// The oriented edges a motif's eigenvectors live on (both directions of
/// every traversal edge), sorted by edge id.
inline std::vector<int> motif_support(const Graph& g, const Motif& m) {
    std::vector<int> edges;
    const int r = m.size;
    for (int i = 0; i < r; ++i) {
        int u = m.nodes[i], w = m.nodes[(i + 1) % r];
        edges.push_back(g.edge_index(u, w));
        edges.push_back(g.edge_index(w, u));
    }
    std::sort(edges.begin(), edges.end());
    return edges;
}

namespace detail {

struct Chain {
    int a, b;                   // endpoints (anchors), a <= b
    std::vector<int> interior;  // the degree-2 nodes between them, from a to b
};

/// All maximal chains of degree-2 nodes between anchors, deduplicated. For a
/// loop (a == b) the interior is stored in its lexicographically smaller
/// orientation.
inline std::vector<Chain> anchor_chains(const Graph& g) {
    std::set<std::tuple<int, int, std::vector<int>>> seen;
    for (int a = 0; a < g.num_nodes(); ++a) {
        if (g.degree(a) <= 2) continue;
        for (int x : g.neighbors(a)) {
            int prev = a, cur = x;
            std::vector<int> interior;
            while (g.degree(cur) == 2) {
                interior.push_back(cur);
                int nxt = g.neighbors(cur)[0] == prev ? g.neighbors(cur)[1]
                                                      : g.neighbors(cur)[0];
                prev = cur;
                cur = nxt;
            }
            int b = cur;
            std::vector<int> canon = interior;
            if (b < a || (b == a && std::vector<int>(interior.rbegin(), interior.rend()) < canon))
                canon.assign(interior.rbegin(), interior.rend());
            seen.emplace(std::min(a, b), std::max(a, b), std::move(canon));
        }
    }
    std::vector<Chain> out;
    for (const auto& [a, b, interior] : seen) out.push_back({a, b, interior});
    return out;
}

}  // namespace detail

/// Exhaustive census of pendants, collars, and bracelets. Requires minimum
/// degree 2; peel to the 2-core first for a general graph. A cycle graph
/// yields the single degenerate whole-graph motif (kind set by parity).
inline std::vector<Motif> find_motifs(const Graph& g) {
    if (!g.is_md2())
        throw PreconditionError("find_motifs: minimum degree 2 required (pass the 2-core)");

    std::vector<Motif> motifs;
    if (g.is_cycle_graph()) {
        Motif m;
        m.size = g.num_nodes();
        m.kind = m.size % 2 ? MotifKind::pendant : MotifKind::collar;
        m.whole_graph = true;
        m.nodes.push_back(0);
        int prev = 0, cur = g.neighbors(0)[0];
        while (cur != 0) {
            m.nodes.push_back(cur);
            int nxt = g.neighbors(cur)[0] == prev ? g.neighbors(cur)[1] : g.neighbors(cur)[0];
            prev = cur;
            cur = nxt;
        }
        motifs.push_back(std::move(m));
        return motifs;
    }

    auto chains = detail::anchor_chains(g);

    // Loops at one anchor: pendants (odd), collars (even), and bracelet pairs.
    std::map<std::pair<int, int>, std::vector<const detail::Chain*>> loops;  // (anchor, r)
    for (const auto& c : chains) {
        if (c.a != c.b) continue;
        int r = static_cast<int>(c.interior.size()) + 1;
        Motif m;
        m.kind = r % 2 ? MotifKind::pendant : MotifKind::collar;
        m.size = r;
        m.anchors = {c.a};
        m.nodes.push_back(c.a);
        m.nodes.insert(m.nodes.end(), c.interior.begin(), c.interior.end());
        motifs.push_back(std::move(m));
        loops[{c.a, r}].push_back(&c);
    }
    for (const auto& [key, group] : loops) {
        for (size_t i = 0; i < group.size(); ++i)
            for (size_t j = i + 1; j < group.size(); ++j) {
                Motif m;
                m.kind = MotifKind::bracelet;
                m.size = 2 * key.second;
                m.anchors = {key.first};
                for (const auto* loop : {group[i], group[j]}) {
                    m.nodes.push_back(key.first);
                    m.nodes.insert(m.nodes.end(), loop->interior.begin(), loop->interior.end());
                }
                motifs.push_back(std::move(m));
            }
    }

    // Equal-length chain pairs between two anchors: two-anchor collars.
    std::map<std::tuple<int, int, int>, std::vector<const detail::Chain*>> spans;
    for (const auto& c : chains) {
        if (c.a == c.b || c.interior.empty()) continue;
        spans[{c.a, c.b, static_cast<int>(c.interior.size())}].push_back(&c);
    }
    for (const auto& [key, group] : spans) {
        auto [a, b, k] = key;
        for (size_t i = 0; i < group.size(); ++i)
            for (size_t j = i + 1; j < group.size(); ++j) {
                Motif m;
                m.kind = MotifKind::collar;
                m.size = 2 * (k + 1);
                m.anchors = {a, b};
                m.nodes.push_back(a);
                m.nodes.insert(m.nodes.end(), group[i]->interior.begin(), group[i]->interior.end());
                m.nodes.push_back(b);
                m.nodes.insert(m.nodes.end(), group[j]->interior.rbegin(), group[j]->interior.rend());
                motifs.push_back(std::move(m));
            }
    }

    std::sort(motifs.begin(), motifs.end(), [](const Motif& x, const Motif& y) {
        if (x.size != y.size) return x.size < y.size;
        if (x.kind != y.kind) return static_cast<int>(x.kind) < static_cast<int>(y.kind);
        return x.nodes < y.nodes;
    });
    return motifs;
}

namespace detail {

/// One traversal direction of a motif: the forward piece carries weights
/// lambda^{-i} on n_i -> n_{i+1}, the backward piece -lambda^{1+i} on
/// n_{i+1} -> n_i.
inline Eigen::VectorXcd traversal_piece(const Graph& g, const Motif& m, Complex lambda,
                                        bool forward) {
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(g.num_oriented());
    const int r = m.size;
    for (int i = 0; i < r; ++i) {
        int u = m.nodes[i], w = m.nodes[(i + 1) % r];
        if (forward)
            v[g.edge_index(u, w)] += std::pow(lambda, -static_cast<double>(i));
        else
            v[g.edge_index(w, u)] -= std::pow(lambda, static_cast<double>(1 + i));
    }
    return v;
}

}  // namespace detail

/// The motif's eigenvector for an r-th root of unity lambda (lambda^2 != 1):
/// weights lambda^{-i} along the traversal and -lambda^{1+i} against it. The
/// incoming sums telescope to zero exactly at the anchor positions, so the
/// vector never leaks and B v = lambda v holds on the whole graph.
inline Eigen::VectorXcd motif_eigenvector(const Graph& g, const Motif& m, Complex lambda) {
    if (std::abs(std::pow(lambda, static_cast<double>(m.size)) - 1.0) > 1e-9)
        throw PreconditionError("motif_eigenvector: lambda is not an r-th root of unity");
    if (std::abs(lambda * lambda - 1.0) <= 1e-9)
        throw PreconditionError("motif_eigenvector: lambda must not be a square root of unity");
    return detail::traversal_piece(g, m, lambda, true) +
           detail::traversal_piece(g, m, lambda, false);
}

/// Leak test: a vector leaks out of its support via a node k when k touches
/// a nonzero edge value, has degree != 2, and collects a nonzero incoming
/// sum. offenders lists every such node.
struct LeakReport {
    bool leaky = false;
    std::vector<int> offenders;
};

inline LeakReport is_leaky(const Graph& g, const Eigen::VectorXcd& v, double tol = 1e-10) {
    if (v.size() != g.num_oriented())
        throw PreconditionError("is_leaky: vector length != number of oriented edges");
    std::vector<char> in_support(g.num_nodes(), 0);
    Eigen::VectorXcd into = Eigen::VectorXcd::Zero(g.num_nodes());
    for (int e = 0; e < g.num_oriented(); ++e) {
        into[g.edge(e).tgt] += v[e];
        if (std::abs(v[e]) > tol) {
            in_support[g.edge(e).src] = 1;
            in_support[g.edge(e).tgt] = 1;
        }
    }
    LeakReport r;
    for (int k = 0; k < g.num_nodes(); ++k)
        if (in_support[k] && g.degree(k) != 2 && std::abs(into[k]) > tol)
            r.offenders.push_back(k);
    r.leaky = !r.offenders.empty();
    return r;
}

/// Predicted geometric multiplicities of the unit eigenvalues other than +-1.
/// One row per motif size r present: every primitive r-th root of unity is
/// expected with GM equal to the number of size-r motifs (raw) and, as the
/// authoritative value, the rank of their stacked eigenvectors (independent).
/// A cycle graph predicts 2 (the two traversal directions).
struct UnitPredictionRow {
    int order = 0;           // r
    int motif_count = 0;     // motifs of size exactly r
    int raw_gm = 0;          // predicted GM before independence
    int independent_gm = 0;  // rank of the stacked eigenvectors
};

struct UnitPrediction {
    std::vector<UnitPredictionRow> rows;  // ascending order r

    const UnitPredictionRow* row_for(int order) const {
        for (const auto& r : rows)
            if (r.order == order) return &r;
        return nullptr;
    }
};

inline UnitPrediction predict_unit_spectrum(const Graph& g) {
    auto motifs = find_motifs(g);
    std::map<int, std::vector<const Motif*>> by_size;
    for (const auto& m : motifs) by_size[m.size].push_back(&m);

    UnitPrediction pred;
    for (const auto& [r, group] : by_size) {
        Complex lambda = std::polar(1.0, 2.0 * M_PI / static_cast<double>(r));
        UnitPredictionRow row;
        row.order = r;
        row.motif_count = static_cast<int>(group.size());
        Eigen::MatrixXcd stack;
        if (group.size() == 1 && group[0]->whole_graph) {
            row.raw_gm = 2;
            stack.resize(g.num_oriented(), 2);
            stack.col(0) = detail::traversal_piece(g, *group[0], lambda, true);
            stack.col(1) = detail::traversal_piece(g, *group[0], lambda, false);
        } else {
            row.raw_gm = row.motif_count;
            stack.resize(g.num_oriented(), group.size());
            for (size_t i = 0; i < group.size(); ++i)
                stack.col(i) = motif_eigenvector(g, *group[i], lambda);
        }
        row.independent_gm = numerical_rank(stack).rank;
        pred.rows.push_back(row);
    }
    return pred;
}

/// Greedy back-extension: starting from the largest entry of an eigenvector
/// with lambda != 0, repeatedly steps to the largest nonzero predecessor
/// coordinate until an oriented edge repeats; the segment between the two
/// visits is a directed cycle on which v never vanishes.
inline std::vector<int> back_extension_cycle(const Graph& g, const Eigen::VectorXcd& v,
                                             double tol = 1e-10) {
    if (v.size() != g.num_oriented())
        throw PreconditionError("back_extension_cycle: vector length mismatch");
    int cur;
    v.cwiseAbs().maxCoeff(&cur);
    if (std::abs(v[cur]) <= tol)
        throw PreconditionError("back_extension_cycle: vector is numerically zero");

    std::vector<int> order(g.num_oriented(), -1);  // step at which an edge was visited
    std::vector<int> path;
    while (order[cur] < 0) {
        order[cur] = static_cast<int>(path.size());
        path.push_back(cur);
        auto [k, l] = g.edge(cur);
        int best = -1;
        double best_abs = tol;
        for (int i : g.neighbors(k)) {
            if (i == l) continue;
            int e = g.edge_index(i, k);
            if (std::abs(v[e]) > best_abs) {
                best_abs = std::abs(v[e]);
                best = e;
            }
        }
        if (best < 0)
            throw NumericError("back_extension_cycle: no nonzero predecessor (is lambda zero?)");
        cur = best;
    }
    std::vector<int> cycle(path.begin() + order[cur], path.end());
    std::reverse(cycle.begin(), cycle.end());  // back-extension walks against the arrows
    return cycle;
}

}  // namespace nbs
