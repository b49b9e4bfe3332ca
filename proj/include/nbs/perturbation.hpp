#pragma once

#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "nbs/addition.hpp"
#include "nbs/errors.hpp"
#include "nbs/graph.hpp"
#include "nbs/linalg.hpp"
#include "nbs/nb_matrix.hpp"

#include <Eigen/Dense>

namespace nbs {

/// Perron eigenpair of the edge operator, found by power iteration.
struct PerronResult {
    double lambda = 0.0;
    Eigen::VectorXd right;          // entrywise positive, unit 1-norm
    Eigen::VectorXd left;           // reversal image, scaled so left.dot(right) == 1
    Eigen::VectorXd nb_centrality;  // per node: mass flowing into the node
    int iterations = 0;
    double residual = 0.0;
};

/// Power iteration for the leading eigenpair. Requires a host whose leading
/// eigenvalue is the unique positive real one on its circle: minimum degree
/// two, more than one independent cycle, and no bipartition. Iterating on
/// B + I instead of B keeps convergence even when the cycle-length period
/// exceeds one, since the shift separates the leading modulus.
inline PerronResult perron(const Graph& g) {
    if (!g.is_md2())
        throw PreconditionError("perron: host must have minimum degree 2");
    if (g.is_cycle_graph())
        throw PreconditionError(
            "perron: cycle graph has spectral radius 1 with every eigenvalue on the "
            "unit circle; use leading_report instead");
    if (is_bipartite(g))
        throw PreconditionError(
            "perron: bipartite host carries the antipodal pair +r, -r; plain power "
            "iteration cannot separate them, use leading_report instead");

    NBOperator nb(g);
    const int n = g.num_oriented();
    Eigen::VectorXcd x = Eigen::VectorXcd::Constant(n, Complex(1.0 / n, 0.0));
    double lambda = 0.0;
    double res = std::numeric_limits<double>::infinity();
    int it = 0;
    const int max_it = 200000;
    for (; it < max_it; ++it) {
        Eigen::VectorXcd bx = nb.apply(x);
        Eigen::VectorXcd shifted = bx + x;
        shifted /= shifted.template lpNorm<1>();
        x = shifted;
        bx = nb.apply(x);
        lambda = bx.real().dot(x.real()) / x.real().squaredNorm();
        res = (bx - lambda * x).norm();
        if (res <= 1e-10 * std::max(1.0, lambda)) break;
    }
    if (res > 1e-10 * std::max(1.0, lambda))
        throw NumericError("perron: power iteration did not reach the residual target");

    PerronResult out;
    out.lambda = lambda;
    out.iterations = it;
    out.residual = res;
    out.right = x.real();
    out.right /= out.right.sum();
    if (out.right.minCoeff() <= 0.0)
        throw NumericError("perron: leading vector is not entrywise positive");

    out.left.resize(n);
    for (int e = 0; e < n; ++e) out.left[e] = out.right[g.reverse(e)];
    out.left /= out.left.dot(out.right);

    out.nb_centrality.resize(g.num_nodes());
    Eigen::VectorXcd rc = out.right.cast<Complex>();
    for (int k = 0; k < g.num_nodes(); ++k)
        out.nb_centrality[k] = into_node(g, rc, k).real();
    return out;
}

/// Solves (B - tI) x = w. The shift must stay clear of the spectrum; a
/// collapsing reciprocal condition number is reported as a numerical error.
inline Eigen::VectorXcd resolvent_apply(const Graph& g, Complex t, const Eigen::VectorXcd& w) {
    NBOperator nb(g);
    const int n = g.num_oriented();
    Eigen::MatrixXcd shifted = nb.dense_complex();
    shifted -= t * Eigen::MatrixXcd::Identity(n, n);
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(shifted);
    // rcond comes back NaN on an exactly singular factorization, so gate on
    // the healthy side of the comparison.
    if (!(lu.rcond() > 1e-11))
        throw NumericError("resolvent_apply: shift is numerically inside the spectrum");
    return lu.solve(w);
}

namespace detail {

/// The active block of -Y(t) X, folded down to the attachment degree by
/// cycling the product: spectra of DFE*Y and FEY*D agree away from zero.
/// Entrywise nonnegative for real t beyond the spectral radius.
inline Eigen::MatrixXd detour_block(const AdditionBlocks& ab, double t) {
    const int n = ab.host.num_oriented();
    const int d = ab.degree();
    Eigen::MatrixXd shifted = t * Eigen::MatrixXd::Identity(n, n) - NBOperator(ab.host).dense();
    Eigen::MatrixXd z = Eigen::PartialPivLU<Eigen::MatrixXd>(shifted).solve(
        ab.d_block.rightCols(d));
    Eigen::MatrixXd w = ab.f_block.bottomLeftCorner(d, d) * (ab.e_block.topRows(d) * z);
    return w;
}

}  // namespace detail

/// y(t): the negative real eigenvalue of Y(t)X realizing its spectral
/// radius, for real t beyond the host's leading eigenvalue.
inline double y_of_t(const AdditionBlocks& ab, double lambda, double t,
                     double eps_gap = 1e-6) {
    if (!(t > lambda + eps_gap))
        throw PreconditionError("y_of_t: t must exceed the leading eigenvalue");
    const int d = ab.degree();
    if (d == 1) return 0.0;

    Eigen::MatrixXd w = detail::detour_block(ab, t);
    if (w.minCoeff() < -1e-10)
        throw NumericError("y_of_t: detour block lost nonnegativity");

    Eigen::VectorXd v = Eigen::VectorXd::Constant(d, 1.0 / d);
    double rho = 0.0;
    for (int it = 0; it < 100000; ++it) {
        Eigen::VectorXd wv = w * v;
        const double nrm = wv.template lpNorm<1>();
        if (nrm == 0.0) return 0.0;
        v = wv / nrm;
        wv = w * v;
        rho = wv.dot(v) / v.squaredNorm();
        if ((wv - rho * v).norm() <= 1e-13 * std::max(1.0, rho)) break;
    }

    // The folded block is strictly positive for d >= 2, so the leading
    // eigenvalue must come out real, positive, and simple.
    Eigen::VectorXcd mu = Eigen::EigenSolver<Eigen::MatrixXd>(w, false).eigenvalues();
    int at_top = 0;
    for (int i = 0; i < mu.size(); ++i)
        if (std::abs(mu[i]) >= rho * (1.0 - 1e-8)) ++at_top;
    if (at_top != 1)
        throw NumericError("y_of_t: leading detour eigenvalue is not simple");
    return -rho;
}

struct YSample {
    double t;
    double y;
};

struct LambdaCSearch {
    double lambda_c = 0.0;
    int evals = 0;
    std::vector<YSample> trace;
};

/// Locates the perturbed leading eigenvalue as the root of f(t) = y(t) + t^2
/// beyond lambda. Bisection on an expanding bracket; the bracket cap turns a
/// theory violation into a diagnostic instead of a hang.
inline LambdaCSearch find_lambda_c(const AdditionBlocks& ab, double lambda,
                                   double eps_gap = 1e-6) {
    LambdaCSearch out;
    if (ab.degree() == 1) {
        out.lambda_c = lambda;
        return out;
    }
    auto f = [&](double t) {
        const double y = y_of_t(ab, lambda, t, 0.25 * (t - lambda));
        ++out.evals;
        out.trace.push_back({t, y});
        return y + t * t;
    };

    double lo = lambda + eps_gap;
    double flo = f(lo);
    for (int shrink = 0; flo >= 0.0 && shrink < 60; ++shrink) {
        lo = lambda + (lo - lambda) / 4.0;
        flo = f(lo);
    }
    if (flo >= 0.0)
        throw NumericError("find_lambda_c: no sign change above the leading eigenvalue");

    const double cap = std::ldexp(1.0 + lambda, 20);
    double hi = 0.0, fhi = 0.0;
    bool bracketed = false;
    for (double step = 1.0; step <= cap; step *= 2.0) {
        hi = lambda + step;
        fhi = f(hi);
        if (fhi == 0.0) {
            out.lambda_c = hi;
            return out;
        }
        if (fhi > 0.0) {
            bracketed = true;
            break;
        }
        lo = hi;
        flo = fhi;
    }
    if (!bracketed)
        throw NumericError("find_lambda_c: bracket expansion cap reached without a root");

    double mid = lo;
    for (int it = 0; it < 500; ++it) {
        mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if (std::abs(fm) <= 1e-10) {
            out.lambda_c = mid;
            return out;
        }
        if (fm < 0.0)
            lo = mid;
        else
            hi = mid;
    }
    throw NumericError("find_lambda_c: bisection stalled before reaching the residual target");
}

struct DiskRow {
    double t;
    int disk;  // 0 is the leading eigenvalue's disk
    Complex center;
    double radius;
};

struct GershgorinTrace {
    bool available = false;
    std::string note;
    std::vector<DiskRow> rows;
    std::vector<YSample> y_at;
    std::vector<char> y_in_union;  // per sampled t
    std::vector<char> disk0_isolated;  // per sampled t: y lies in disk 0 only
};

/// Disk evidence for the root location argument: conjugate Y(t)X into
/// H = T a T with a_ij = l_i X r_j and T_ii = 1 / sqrt(lambda_i - t), then
/// report each disk's center and radius. y(t) must land in the union.
inline GershgorinTrace gershgorin_trace(const AdditionBlocks& ab,
                                        const std::vector<double>& ts) {
    GershgorinTrace out;
    NBOperator nb(ab.host);
    const Eigen::MatrixXcd b = nb.dense_complex();
    EigenDecomposition ed = eig(b, true);  // refuses a defective host
    const Eigen::MatrixXcd& r = ed.right;
    const Eigen::MatrixXcd& l = *ed.left;
    const int n = static_cast<int>(ed.eigenvalues.size());

    int lead = 0;
    for (int i = 1; i < n; ++i)
        if (ed.eigenvalues[i].real() > ed.eigenvalues[lead].real()) lead = i;
    const double lambda = ed.eigenvalues[lead].real();
    std::vector<int> order(1, lead);
    for (int i = 0; i < n; ++i)
        if (i != lead) order.push_back(i);

    const Eigen::MatrixXcd alpha = l * ab.x.cast<Complex>() * r;

    for (double t : ts) {
        Eigen::VectorXcd tdiag(n);
        for (int i = 0; i < n; ++i)
            tdiag[i] = 1.0 / std::sqrt(ed.eigenvalues[order[static_cast<size_t>(i)]] -
                                       Complex(t, 0.0));
        const double y = y_of_t(ab, lambda, t);
        bool in_union = false;
        bool in_other = false;
        for (int i = 0; i < n; ++i) {
            const int oi = order[static_cast<size_t>(i)];
            const Complex center = alpha(oi, oi) * tdiag[i] * tdiag[i];
            double radius = 0.0;
            for (int j = 0; j < n; ++j) {
                if (j == i) continue;
                const int oj = order[static_cast<size_t>(j)];
                radius += std::abs(alpha(oi, oj) * tdiag[i] * tdiag[j]);
            }
            out.rows.push_back({t, i, center, radius});
            const bool holds = std::abs(center - Complex(y, 0.0)) <= radius + 1e-9;
            if (holds) in_union = true;
            if (holds && i != 0) in_other = true;
        }
        out.y_at.push_back({t, y});
        out.y_in_union.push_back(in_union ? 1 : 0);
        out.disk0_isolated.push_back((in_union && !in_other) ? 1 : 0);
    }
    out.available = true;
    return out;
}

struct PerturbationProbe {
    PerturbationProbe(AdditionBlocks b, PerronResult pr)
        : blocks(std::move(b)), host_perron(std::move(pr)) {}

    AdditionBlocks blocks;
    PerronResult host_perron;
    double lambda = 0.0;
    double lambda_c = 0.0;
    double eigen_drop = 0.0;  // lambda_c - lambda
    double alpha11 = 0.0;
    bool trivial = false;  // degree-1 attachment: the spectrum only gains zeros
    double direct_lambda_c = 0.0;
    double direct_gap = 0.0;
    double yx_eigen_gap = std::numeric_limits<double>::quiet_NaN();
    double det_identity_max_rel = 0.0;
    int bisection_evals = 0;
    std::vector<YSample> y_samples;
    GershgorinTrace disks;
};

inline PerturbationProbe run_probe(const Graph& host, const std::vector<int>& attach,
                                   unsigned seed = 2027, bool with_disks = true) {
    PerturbationProbe probe(make_addition(host, attach), perron(host));
    probe.lambda = probe.host_perron.lambda;
    const int n = host.num_oriented();
    const int d = probe.blocks.degree();

    probe.alpha11 = probe.host_perron.left.dot(probe.blocks.x * probe.host_perron.right);

    if (d == 1) {
        probe.trivial = true;
        probe.lambda_c = probe.lambda;
    } else {
        LambdaCSearch search = find_lambda_c(probe.blocks, probe.lambda);
        probe.lambda_c = search.lambda_c;
        probe.bisection_evals = search.evals;
        probe.y_samples = std::move(search.trace);
    }
    probe.eigen_drop = probe.lambda_c - probe.lambda;

    {
        NBOperator ext(probe.blocks.extended);
        EigenDecomposition ed = eig(ext.dense_complex());
        double rho = 0.0;
        for (int i = 0; i < ed.eigenvalues.size(); ++i)
            rho = std::max(rho, std::abs(ed.eigenvalues[i]));
        probe.direct_lambda_c = rho;
        probe.direct_gap = std::abs(rho - probe.lambda_c);
    }

    NBOperator nb(host);
    const Eigen::MatrixXcd b = nb.dense_complex();
    const Eigen::MatrixXcd xc = probe.blocks.x.cast<Complex>();
    if (!probe.trivial) {
        Eigen::MatrixXcd shifted = b - probe.lambda_c * Eigen::MatrixXcd::Identity(n, n);
        Eigen::MatrixXcd yx = Eigen::PartialPivLU<Eigen::MatrixXcd>(shifted).solve(xc);
        Eigen::VectorXcd mu = eig(yx).eigenvalues;
        double gap = std::numeric_limits<double>::infinity();
        const Complex want(-probe.lambda_c * probe.lambda_c, 0.0);
        for (int i = 0; i < mu.size(); ++i) gap = std::min(gap, std::abs(mu[i] - want));
        probe.yx_eigen_gap = gap;
    }

    {
        NBOperator ext(probe.blocks.extended);
        const Eigen::MatrixXcd bc = ext.dense_complex();
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> rad(0.1, 0.45);
        std::uniform_real_distribution<double> ang(0.0, 2.0 * M_PI);
        double worst = 0.0;
        for (int s = 0; s < 10; ++s) {
            const Complex t = std::polar(rad(rng), ang(rng));
            ScaledDeterminant lhs =
                determinant(Eigen::MatrixXcd(bc - t * Eigen::MatrixXcd::Identity(bc.rows(),
                                                                                 bc.cols())));
            ScaledDeterminant rhs =
                determinant(Eigen::MatrixXcd(b - t * Eigen::MatrixXcd::Identity(n, n)));
            rhs *= scaled_power(t, 2 * d);
            Eigen::MatrixXcd shifted = b - t * Eigen::MatrixXcd::Identity(n, n);
            Eigen::MatrixXcd yx = Eigen::PartialPivLU<Eigen::MatrixXcd>(shifted).solve(xc);
            rhs *= determinant(
                Eigen::MatrixXcd(Eigen::MatrixXcd::Identity(n, n) + yx / (t * t)));
            worst = std::max(worst, scaled_relative_difference(lhs, rhs));
        }
        probe.det_identity_max_rel = worst;
    }

    if (with_disks) {
        try {
            std::vector<double> ts{probe.lambda + 1e-3, probe.lambda + 0.5,
                                   probe.lambda + 1.0, probe.lambda + 10.0};
            if (!probe.trivial && probe.eigen_drop > 2e-6) ts.insert(ts.begin() + 1, probe.lambda_c);
            probe.disks = gershgorin_trace(probe.blocks, ts);
        } catch (const NumericError& err) {
            probe.disks.available = false;
            probe.disks.note = err.what();
        }
    }
    return probe;
}

}  // namespace nbs
