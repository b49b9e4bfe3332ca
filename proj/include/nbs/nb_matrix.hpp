#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <sstream>
#include <vector>

#include "nbs/errors.hpp"
#include "nbs/graph.hpp"

namespace nbs {

using Complex = std::complex<double>;
using IntMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

/// The non-backtracking operator of a graph: the 0/1 matrix on oriented
/// edges with entry (k->l, i->j) = [j == k][i != l]. Row k->l therefore
/// sums to deg(k) - 1 and column i->j to deg(j) - 1. Kept both as an
/// explicit sparse row structure and as matrix-free application rules; the
/// two are cross-checked in the tests.
class NBOperator {
public:
    explicit NBOperator(const Graph& g) : g_(g) {
        const int dim = g.num_oriented();
        row_ptr_.assign(dim + 1, 0);
        for (int e = 0; e < dim; ++e) {
            auto [k, l] = g.edge(e);
            row_ptr_[e + 1] = row_ptr_[e] + g.degree(k) - 1;
        }
        col_idx_.resize(row_ptr_[dim]);
        int pos = 0;
        for (int e = 0; e < dim; ++e) {
            auto [k, l] = g.edge(e);
            for (int i : g.neighbors(k)) {
                if (i == l) continue;  // the backtracking continuation
                col_idx_[pos++] = g.edge_index(i, k);
            }
        }
    }

    const Graph& graph() const { return g_; }
    int dim() const { return g_.num_oriented(); }

    /// Column indices of the nonzero entries in a row (all entries are 1).
    std::vector<int> row(int e) const {
        return {col_idx_.begin() + row_ptr_[e], col_idx_.begin() + row_ptr_[e + 1]};
    }

    Eigen::MatrixXd dense() const {
        Eigen::MatrixXd b = Eigen::MatrixXd::Zero(dim(), dim());
        for (int e = 0; e < dim(); ++e)
            for (int p = row_ptr_[e]; p < row_ptr_[e + 1]; ++p) b(e, col_idx_[p]) = 1.0;
        return b;
    }

    Eigen::MatrixXcd dense_complex() const { return dense().cast<Complex>(); }

    /// Matrix-free y = B v: y_{k->l} = (sum of v into k) - v_{l->k}.
    Eigen::VectorXcd apply(const Eigen::VectorXcd& v) const {
        Eigen::VectorXcd into = Eigen::VectorXcd::Zero(g_.num_nodes());
        for (int e = 0; e < dim(); ++e) into[g_.edge(e).tgt] += v[e];
        Eigen::VectorXcd out(dim());
        for (int e = 0; e < dim(); ++e) out[e] = into[g_.edge(e).src] - v[g_.reverse(e)];
        return out;
    }

    /// Matrix-free y = B^T v: y_{i->j} = (sum of v out of j) - v_{j->i}.
    Eigen::VectorXcd apply_transpose(const Eigen::VectorXcd& v) const {
        Eigen::VectorXcd from = Eigen::VectorXcd::Zero(g_.num_nodes());
        for (int e = 0; e < dim(); ++e) from[g_.edge(e).src] += v[e];
        Eigen::VectorXcd out(dim());
        for (int e = 0; e < dim(); ++e) out[e] = from[g_.edge(e).tgt] - v[g_.reverse(e)];
        return out;
    }

    /// y = B^T B v via the degree identity y_{k->l} = (deg(l)-2) (into l) + v_{k->l}.
    Eigen::VectorXcd apply_btb(const Eigen::VectorXcd& v) const {
        Eigen::VectorXcd into = Eigen::VectorXcd::Zero(g_.num_nodes());
        for (int e = 0; e < dim(); ++e) into[g_.edge(e).tgt] += v[e];
        Eigen::VectorXcd out(dim());
        for (int e = 0; e < dim(); ++e) {
            auto [k, l] = g_.edge(e);
            out[e] = static_cast<double>(g_.degree(l) - 2) * into[l] + v[e];
        }
        return out;
    }

    /// y = B B^T v via the degree identity y_{k->l} = (deg(k)-2) (from k) + v_{k->l}.
    Eigen::VectorXcd apply_bbt(const Eigen::VectorXcd& v) const {
        Eigen::VectorXcd from = Eigen::VectorXcd::Zero(g_.num_nodes());
        for (int e = 0; e < dim(); ++e) from[g_.edge(e).src] += v[e];
        Eigen::VectorXcd out(dim());
        for (int e = 0; e < dim(); ++e) {
            auto [k, l] = g_.edge(e);
            out[e] = static_cast<double>(g_.degree(k) - 2) * from[k] + v[e];
        }
        return out;
    }

    /// Exact integer application, for nilpotency and walk-count identities.
    std::vector<std::int64_t> apply_int(const std::vector<std::int64_t>& v) const {
        std::vector<std::int64_t> into(g_.num_nodes(), 0);
        for (int e = 0; e < dim(); ++e) into[g_.edge(e).tgt] += v[e];
        std::vector<std::int64_t> out(dim());
        for (int e = 0; e < dim(); ++e) out[e] = into[g_.edge(e).src] - v[g_.reverse(e)];
        return out;
    }

    /// Exact B^p as an integer matrix; entries count walks of p+1 edges.
    IntMatrix integer_power(int p) const {
        IntMatrix b = IntMatrix::Zero(dim(), dim());
        for (int e = 0; e < dim(); ++e)
            for (int q = row_ptr_[e]; q < row_ptr_[e + 1]; ++q) b(e, col_idx_[q]) = 1;
        IntMatrix acc = IntMatrix::Identity(dim(), dim());
        for (int i = 0; i < p; ++i) acc = (acc * b).eval();
        return acc;
    }

    /// Closed-form inverse, valid exactly when min degree >= 2:
    /// entry (k->l, l->j) = 1/(deg(l)-1), except -(deg(l)-2)/(deg(l)-1) at j == k.
    Eigen::MatrixXd inverse_dense() const {
        if (!g_.is_md2())
            throw PreconditionError("inverse: the operator is singular on graphs with degree-1 nodes");
        Eigen::MatrixXd inv = Eigen::MatrixXd::Zero(dim(), dim());
        for (int e = 0; e < dim(); ++e) {
            auto [k, l] = g_.edge(e);
            const double dl = static_cast<double>(g_.degree(l));
            for (int j : g_.neighbors(l)) {
                int f = g_.edge_index(l, j);
                inv(e, f) = (j == k) ? (2.0 - dl) / (dl - 1.0) : 1.0 / (dl - 1.0);
            }
        }
        return inv;
    }

    /// Exact certificate that B * inverse = I: checks the integer identity
    /// B * ((deg-1)-scaled inverse column) = (deg-1) * unit vector, column by
    /// column, entirely in 64-bit integer arithmetic.
    bool check_inverse_exact() const {
        if (!g_.is_md2()) return false;
        for (int f = 0; f < dim(); ++f) {
            auto [i, j] = g_.edge(f);
            const std::int64_t di = g_.degree(i);
            std::vector<std::int64_t> w(dim(), 0);
            for (int k : g_.neighbors(i))
                w[g_.edge_index(k, i)] = (k == j) ? 2 - di : 1;
            std::vector<std::int64_t> bw = apply_int(w);
            for (int e = 0; e < dim(); ++e)
                if (bw[e] != (e == f ? di - 1 : 0)) return false;
        }
        return true;
    }

    /// Swap every coordinate with its reversed edge (the involution P).
    Eigen::VectorXcd apply_p(const Eigen::VectorXcd& v) const {
        Eigen::VectorXcd out(dim());
        for (int e = 0; e < dim(); ++e) out[e] = v[g_.reverse(e)];
        return out;
    }

    /// "row col" pairs of the nonzero entries, one per line, for external diffing.
    std::string coordinate_dump() const {
        std::ostringstream out;
        for (int e = 0; e < dim(); ++e)
            for (int p = row_ptr_[e]; p < row_ptr_[e + 1]; ++p)
                out << e << ' ' << col_idx_[p] << '\n';
        return out.str();
    }

private:
    Graph g_;
    std::vector<int> row_ptr_;
    std::vector<int> col_idx_;
};

/// Dense matrix of the edge-reversal involution P.
inline Eigen::MatrixXd reversal_matrix(const Graph& g) {
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(g.num_oriented(), g.num_oriented());
    for (int e = 0; e < g.num_oriented(); ++e) p(e, g.reverse(e)) = 1.0;
    return p;
}

/// Indicator vector of one oriented edge.
inline Eigen::VectorXcd chi(const Graph& g, int e) {
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(g.num_oriented());
    v[e] = 1.0;
    return v;
}

/// Sum of v over the edges pointing into node k.
inline Complex into_node(const Graph& g, const Eigen::VectorXcd& v, int k) {
    Complex s = 0.0;
    for (int i : g.neighbors(k)) s += v[g.edge_index(i, k)];
    return s;
}

/// Sum of v over the edges pointing out of node k.
inline Complex from_node(const Graph& g, const Eigen::VectorXcd& v, int k) {
    Complex s = 0.0;
    for (int i : g.neighbors(k)) s += v[g.edge_index(k, i)];
    return s;
}

/// The 2n x 2n companion linearization whose spectrum carries the
/// non-backtracking eigenvalues that do not come from the trivial +-1
/// factor. Derivation: the Ihara determinant identity
///     det(I - tB) = (1 - t^2)^(m-n) det(I - tA + t^2 (D - I))
/// becomes, after substituting t = 1/lambda and clearing powers,
///     det(lambda I - B) = (lambda^2 - 1)^(m-n) det(lambda^2 I - lambda A + (D - I)).
/// The right-hand quadratic pencil lambda^2 I - lambda A + (D - I) is
/// linearized by the block companion matrix
///     C = [ A   I - D ]
///         [ I     0   ]
/// (an eigenpair (lambda, x) of the pencil corresponds to the eigenvector
/// [lambda x; x] of C). Hence for m >= n: spectrum(B) = spectrum(C) plus
/// (m - n) extra copies each of +1 and -1, and for a tree (m = n - 1):
/// spectrum(C) = spectrum(B) plus one copy each of +1 and -1.
inline Eigen::MatrixXd companion_matrix(const Graph& g) {
    const int n = g.num_nodes();
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    for (const auto& [u, v] : g.undirected_edges()) {
        c(u, v) = 1.0;
        c(v, u) = 1.0;
    }
    for (int u = 0; u < n; ++u) {
        c(u, n + u) = 1.0 - static_cast<double>(g.degree(u));
        c(n + u, u) = 1.0;
    }
    return c;
}

/// Brute-force count of non-backtracking walks with p+1 edges that start
/// with the oriented edge e_start and end with e_end. Exponential; guarded
/// to small graphs. Equals the (e_end, e_start) entry of B^p.
inline std::int64_t nb_walk_count(const Graph& g, int e_start, int e_end, int p) {
    if (g.num_nodes() > 10)
        throw PreconditionError("nb_walk_count: brute-force counter is limited to n <= 10");
    if (p < 0) throw PreconditionError("nb_walk_count: p must be >= 0");
    std::int64_t count = 0;
    // Iterative DFS over (edge, steps remaining).
    std::vector<std::pair<int, int>> stack{{e_start, p}};
    while (!stack.empty()) {
        auto [e, rem] = stack.back();
        stack.pop_back();
        if (rem == 0) {
            count += (e == e_end) ? 1 : 0;
            continue;
        }
        auto [i, j] = g.edge(e);
        for (int k : g.neighbors(j))
            if (k != i) stack.emplace_back(g.edge_index(j, k), rem - 1);
    }
    return count;
}

}  // namespace nbs
