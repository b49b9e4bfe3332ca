#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

#include "nbs/errors.hpp"

namespace nbs {

namespace defaults {
constexpr double eps_rank = 1e-8;       // relative singular-value threshold
constexpr double delta_cluster = 1e-6;  // single-linkage clustering radius
constexpr double tau_band = 1e-6;       // classification band width
constexpr double eig_residual = 1e-8;   // eigenpair residual bound, times ||A||
constexpr int max_dense_dim = 2000;     // refuse dense decompositions beyond this
}  // namespace defaults

using Complex = std::complex<double>;

/// Dense eigendecomposition, eigenvalues sorted by decreasing modulus with
/// ties broken by ascending argument. Right eigenvectors are unit norm; when
/// requested, left row vectors are binormalized against them (L * R = I), so
/// sum_i right_i * left_i^T is the identity for diagonalizable input.
struct EigenDecomposition {
    Eigen::VectorXcd eigenvalues;
    Eigen::MatrixXcd right;              // column i pairs with eigenvalues[i]
    std::optional<Eigen::MatrixXcd> left;  // row i, if computed
    Eigen::VectorXd residuals;           // ||A r_i - lambda_i r_i||_2
    double norm = 0.0;                   // infinity norm of A, for residual scaling

    bool residuals_within(double tol) const { return residuals.maxCoeff() <= tol * norm; }
};

namespace detail {

inline bool eig_order(const Complex& a, const Complex& b) {
    double ma = std::abs(a), mb = std::abs(b);
    if (ma != mb) return ma > mb;
    return std::arg(a) < std::arg(b);
}

inline std::vector<int> sorted_indices(const Eigen::VectorXcd& values) {
    std::vector<int> idx(values.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](int a, int b) { return eig_order(values[a], values[b]); });
    return idx;
}

}  // namespace detail

/// Single-linkage clustering of points in the complex plane: two points end
/// up in one cluster when a chain of steps, each of length <= delta, joins
/// them. Clusters are returned sorted by decreasing centroid modulus (ties
/// by argument), members by index.
struct Cluster {
    Complex centroid;
    int count = 0;
    std::vector<int> members;
};

inline std::vector<Cluster> cluster_eigenvalues(const Eigen::VectorXcd& values, double delta) {
    const int k = static_cast<int>(values.size());
    std::vector<int> root(k);
    std::iota(root.begin(), root.end(), 0);
    std::function<int(int)> find = [&](int x) {
        while (root[x] != x) x = root[x] = root[root[x]];
        return x;
    };
    for (int i = 0; i < k; ++i)
        for (int j = i + 1; j < k; ++j)
            if (std::abs(values[i] - values[j]) <= delta) root[find(i)] = find(j);

    std::vector<Cluster> clusters;
    std::vector<int> where(k, -1);
    for (int i = 0; i < k; ++i) {
        int r = find(i);
        if (where[r] < 0) {
            where[r] = static_cast<int>(clusters.size());
            clusters.emplace_back();
        }
        clusters[where[r]].members.push_back(i);
    }
    for (auto& c : clusters) {
        Complex sum = 0.0;
        for (int i : c.members) sum += values[i];
        c.count = static_cast<int>(c.members.size());
        c.centroid = sum / static_cast<double>(c.count);
    }
    std::sort(clusters.begin(), clusters.end(),
              [](const Cluster& a, const Cluster& b) { return detail::eig_order(a.centroid, b.centroid); });
    return clusters;
}

/// Dense nonsymmetric eigendecomposition (complex Schur based). When
/// with_left is set, left vectors come from the eigenvectors of A^T: within
/// each proximity cluster of eigenvalues the transpose vectors W are matched
/// to the right block V by solving the small Gram system (W^T V) L = W^T, so
/// that L V = I on the cluster; across clusters biorthogonality is automatic.
/// For a simple eigenvalue this reduces to dividing by the scalar w^T v.
inline EigenDecomposition eig(const Eigen::MatrixXcd& a, bool with_left = false,
                              double pair_delta = defaults::delta_cluster,
                              int max_dim = defaults::max_dense_dim) {
    if (a.rows() != a.cols()) throw PreconditionError("eig: matrix must be square");
    if (a.rows() > max_dim)
        throw PreconditionError("eig: dimension " + std::to_string(a.rows()) +
                                " exceeds the dense cap " + std::to_string(max_dim));

    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(a, true);
    if (solver.info() != Eigen::Success)
        throw NumericError("eig: complex Schur iteration failed to converge");

    EigenDecomposition out;
    const auto order = detail::sorted_indices(solver.eigenvalues());
    const int k = static_cast<int>(order.size());
    out.eigenvalues.resize(k);
    out.right.resize(a.rows(), k);
    for (int i = 0; i < k; ++i) {
        out.eigenvalues[i] = solver.eigenvalues()[order[i]];
        out.right.col(i) = solver.eigenvectors().col(order[i]);
        out.right.col(i).normalize();
    }
    out.norm = a.cwiseAbs().rowwise().sum().maxCoeff();
    out.residuals.resize(k);
    for (int i = 0; i < k; ++i)
        out.residuals[i] = (a * out.right.col(i) - out.eigenvalues[i] * out.right.col(i)).norm();

    if (with_left) {
        // A defective matrix has no biorthogonal left system; detect it as
        // numerical singularity of the right eigenvector basis.
        Eigen::JacobiSVD<Eigen::MatrixXcd> rsvd(out.right);
        if (rsvd.singularValues()(k - 1) < defaults::eps_rank * rsvd.singularValues()(0))
            throw NumericError("eig: eigenvector basis is numerically singular (defective matrix?)");

        Eigen::ComplexEigenSolver<Eigen::MatrixXcd> tsolver(a.transpose(), true);
        if (tsolver.info() != Eigen::Success)
            throw NumericError("eig: transpose eigendecomposition failed to converge");

        Eigen::MatrixXcd left = Eigen::MatrixXcd::Zero(k, a.rows());
        std::vector<char> used(k, 0);
        for (const auto& cl : cluster_eigenvalues(out.eigenvalues, pair_delta)) {
            const int q = cl.count;
            // Pick the q transpose eigenvalues closest to the cluster centroid.
            std::vector<int> cand(k);
            std::iota(cand.begin(), cand.end(), 0);
            std::sort(cand.begin(), cand.end(), [&](int x, int y) {
                return std::abs(tsolver.eigenvalues()[x] - cl.centroid) <
                       std::abs(tsolver.eigenvalues()[y] - cl.centroid);
            });
            Eigen::MatrixXcd w(a.rows(), q);
            int taken = 0;
            for (int c : cand) {
                if (used[c]) continue;
                w.col(taken++) = tsolver.eigenvectors().col(c);
                used[c] = 1;
                if (taken == q) break;
            }
            Eigen::MatrixXcd v(a.rows(), q);
            for (int i = 0; i < q; ++i) v.col(i) = out.right.col(cl.members[i]);
            Eigen::MatrixXcd gram = w.transpose() * v;
            Eigen::PartialPivLU<Eigen::MatrixXcd> lu(gram);
            Eigen::MatrixXcd lblock = lu.solve(w.transpose());
            double rcond = gram.cwiseAbs().maxCoeff();
            if (!lblock.allFinite() || rcond == 0.0)
                throw NumericError("eig: left/right pairing degenerate (defective cluster?)");
            for (int i = 0; i < q; ++i) left.row(cl.members[i]) = lblock.row(i);
        }
        Eigen::MatrixXcd check = left * out.right;
        if (!check.allFinite() ||
            (check - Eigen::MatrixXcd::Identity(k, k)).cwiseAbs().maxCoeff() > 1e-6)
            throw NumericError("eig: left/right binormalization failed (defective matrix?)");
        out.left = left;
    }
    return out;
}

inline EigenDecomposition eig(const Eigen::MatrixXd& a, bool with_left = false) {
    return eig(Eigen::MatrixXcd(a.cast<Complex>()), with_left);
}

/// SVD-based rank report. rank counts singular values above
/// eps_rank * sigma_max; the trailing right singular vectors give an
/// orthonormal basis of the numerical null space.
struct RankReport {
    Eigen::VectorXd singular_values;
    int rank = 0;
    int nullity = 0;
    Eigen::MatrixXcd null_basis;  // columns; may have 0 columns
};

inline RankReport numerical_rank(const Eigen::MatrixXcd& a, double eps = defaults::eps_rank) {
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(a, Eigen::ComputeThinU | Eigen::ComputeFullV);
    RankReport r;
    r.singular_values = svd.singularValues();
    const double smax = r.singular_values.size() ? r.singular_values[0] : 0.0;
    const double cut = eps * smax;
    r.rank = 0;
    for (int i = 0; i < r.singular_values.size(); ++i)
        if (smax > 0.0 && r.singular_values[i] > cut) ++r.rank;
    r.nullity = static_cast<int>(a.cols()) - r.rank;
    r.null_basis = svd.matrixV().rightCols(r.nullity);
    return r;
}

inline RankReport numerical_rank(const Eigen::MatrixXd& a, double eps = defaults::eps_rank) {
    return numerical_rank(Eigen::MatrixXcd(a.cast<Complex>()), eps);
}

/// LU solve with an explicit singularity check (relative pivot floor).
inline Eigen::MatrixXcd solve(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b,
                              double pivot_floor = 1e-14) {
    if (a.rows() != a.cols() || a.rows() != b.rows())
        throw PreconditionError("solve: dimension mismatch");
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(a);
    const auto diag = lu.matrixLU().diagonal();
    double dmax = diag.cwiseAbs().maxCoeff();
    double dmin = diag.cwiseAbs().minCoeff();
    if (dmax == 0.0 || dmin < pivot_floor * dmax)
        throw NumericError("solve: matrix is singular at working precision");
    return lu.solve(b);
}

/// Determinant kept as mantissa * 2^exp2 so that products of thousands of
/// factors neither overflow nor underflow. mantissa == 0 encodes the exact
/// zero of a singular matrix; otherwise 1 <= |mantissa| < 2.
struct ScaledDeterminant {
    Complex mantissa = 1.0;
    long exp2 = 0;

    bool is_zero() const { return mantissa == Complex(0.0); }

    void normalize() {
        if (is_zero()) {
            exp2 = 0;
            return;
        }
        if (!std::isfinite(mantissa.real()) || !std::isfinite(mantissa.imag()))
            throw NumericError("determinant: non-finite factor");
        while (std::abs(mantissa) >= 2.0) {
            mantissa *= 0.5;
            ++exp2;
        }
        while (std::abs(mantissa) < 1.0) {
            mantissa *= 2.0;
            --exp2;
        }
    }

    ScaledDeterminant& operator*=(const ScaledDeterminant& o) {
        mantissa *= o.mantissa;
        exp2 += o.exp2;
        normalize();
        return *this;
    }

    ScaledDeterminant& operator*=(Complex z) {
        mantissa *= z;
        if (is_zero())
            exp2 = 0;
        else
            normalize();
        return *this;
    }

    Complex value() const { return mantissa * std::ldexp(1.0, static_cast<int>(exp2)); }

    double log10_abs() const {
        if (is_zero()) return -std::numeric_limits<double>::infinity();
        return std::log10(std::abs(mantissa)) + static_cast<double>(exp2) * std::log10(2.0);
    }
};

/// z^p as a scaled value (p >= 0).
inline ScaledDeterminant scaled_power(Complex z, int p) {
    ScaledDeterminant s;
    for (int i = 0; i < p; ++i) s *= z;
    return s;
}

/// Relative difference |a - b| / max(|a|, |b|) evaluated in the scaled
/// representation; 0 when both are exactly zero.
inline double scaled_relative_difference(const ScaledDeterminant& a, const ScaledDeterminant& b) {
    if (a.is_zero() && b.is_zero()) return 0.0;
    if (a.is_zero() || b.is_zero()) return 1.0;
    long common = std::max(a.exp2, b.exp2);
    // Exponent gaps beyond double range mean the values differ wildly.
    if (common - a.exp2 > 2000 || common - b.exp2 > 2000) return 1.0;
    Complex va = a.mantissa * std::ldexp(1.0, static_cast<int>(a.exp2 - common));
    Complex vb = b.mantissa * std::ldexp(1.0, static_cast<int>(b.exp2 - common));
    return std::abs(va - vb) / std::max(std::abs(va), std::abs(vb));
}

inline ScaledDeterminant determinant(const Eigen::MatrixXcd& a) {
    if (a.rows() != a.cols()) throw PreconditionError("determinant: matrix must be square");
    if (a.rows() == 0) return {};
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(a);
    ScaledDeterminant det;
    det *= Complex(static_cast<double>(lu.permutationP().determinant()), 0.0);
    for (int i = 0; i < a.rows(); ++i) {
        det *= lu.matrixLU()(i, i);
        if (det.is_zero()) return det;
    }
    return det;
}

inline ScaledDeterminant determinant(const Eigen::MatrixXd& a) {
    return determinant(Eigen::MatrixXcd(a.cast<Complex>()));
}

}  // namespace nbs
