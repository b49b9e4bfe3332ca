// Acceptance gate: one line per criterion, nonzero exit if any fail.
#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "nbs/addition.hpp"
#include "nbs/graph.hpp"
#include "nbs/linalg.hpp"
#include "nbs/motifs.hpp"
#include "nbs/nb_matrix.hpp"
#include "nbs/perturbation.hpp"
#include "nbs/shell.hpp"
#include "nbs/spectrum.hpp"

#include "test_support.hpp"

using nbs::Complex;
using nbs::Graph;

namespace {

constexpr double kPi = 3.14159265358979323846;

const std::vector<std::string> kCorpus = {
    "p2",   "p3",   "c3",     "c4",           "c5",           "paw",         "bowtie",
    "k4",   "k33",  "karate", "pendant-tree", "collar-tree",  "fig4b-collars", "diamond"};

const std::vector<std::string> kCorpusMd2 = {"c3",  "c4",     "c5",           "k4",
                                             "k33", "bowtie", "fig4b-collars", "diamond"};

// md2 corpus graphs with at least two independent cycles (m - n + 1 >= 2)
const std::vector<std::string> kCorpusMd2Multi = {"k4", "k33", "bowtie", "fig4b-collars",
                                                  "diamond"};

struct Check {
    bool ok = true;
    std::string why;

    void require(bool cond, const std::string& msg) {
        if (!cond && ok) {
            ok = false;
            why = msg;
        }
    }
};

const nbs::EigenvalueCluster* cluster_near(const nbs::SpectrumReport& rep, Complex z,
                                           double tol = 1e-6) {
    for (const auto& c : rep.clusters)
        if (!c.is_zero && std::abs(c.centroid - z) <= tol) return &c;
    return nullptr;
}

const nbs::EigenvalueCluster* zero_cluster(const nbs::SpectrumReport& rep) {
    for (const auto& c : rep.clusters)
        if (c.is_zero) return &c;
    return nullptr;
}

Graph cycle_graph(int n) {
    std::vector<std::pair<std::int64_t, std::int64_t>> edges;
    for (int i = 0; i < n; ++i) edges.emplace_back(i, (i + 1) % n);
    return Graph::from_edges(edges);
}

std::vector<Complex> sample_points(std::mt19937_64& rng, int count) {
    std::uniform_real_distribution<double> rad(0.05, 0.45), ang(0.0, 2.0 * kPi);
    std::vector<Complex> ts;
    ts.reserve(count);
    for (int i = 0; i < count; ++i) ts.push_back(std::polar(rad(rng), ang(rng)));
    return ts;
}

// 1. Every entry of B^p is the brute-force count of non-backtracking walks.
Check criterion_walks() {
    Check c;
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 50 && c.ok; ++trial) {
        const int n = 2 + static_cast<int>(rng() % 7);
        const int extra = static_cast<int>(rng() % (n + 1));
        Graph g = testsupport::random_connected_graph(n, extra, rng);
        nbs::NBOperator nb(g);
        for (int p = 0; p <= 6 && c.ok; ++p) {
            const auto bp = nb.integer_power(p);
            for (int e = 0; e < g.num_oriented() && c.ok; ++e)
                for (int f = 0; f < g.num_oriented(); ++f)
                    if (bp(e, f) != nbs::nb_walk_count(g, f, e, p)) {
                        std::ostringstream os;
                        os << "trial " << trial << " p=" << p << " entry (" << e << "," << f
                           << "): matrix " << bp(e, f) << " vs count "
                           << nbs::nb_walk_count(g, f, e, p);
                        c.require(false, os.str());
                        break;
                    }
        }
    }
    return c;
}

// 2. Trees: B^n = 0 exactly, AM(0) = 2m, GM(0) = #leaves, never diagonalizable.
Check criterion_trees() {
    Check c;
    std::mt19937_64 rng(22);
    for (int trial = 0; trial < 20 && c.ok; ++trial) {
        const int n = 3 + static_cast<int>(rng() % 10);
        Graph t = testsupport::random_tree(n, rng);
        nbs::NBOperator nb(t);
        c.require(nb.integer_power(n).isZero(),
                  "B^n != 0 on a tree with n=" + std::to_string(n));
        if (!c.ok) break;

        int leaves = 0;
        for (int u = 0; u < t.num_nodes(); ++u)
            if (t.degree(u) == 1) ++leaves;

        auto rep = nbs::compute_spectrum(t);
        const auto* zc = zero_cluster(rep);
        c.require(zc != nullptr, "no zero cluster on a tree");
        if (!c.ok) break;
        c.require(zc->am == 2 * t.num_edges(),
                  "AM(0) != 2m on tree trial " + std::to_string(trial));
        c.require(zc->gm == leaves, "GM(0) != leaf count on tree trial " + std::to_string(trial));
        c.require(!rep.diagonalizable, "tree reported diagonalizable");
    }
    return c;
}

// 3. Cycles C_n: spectrum is the n-th roots of unity, each with AM = GM = 2.
Check criterion_cycles() {
    Check c;
    for (int n = 3; n <= 12 && c.ok; ++n) {
        auto rep = nbs::compute_spectrum(cycle_graph(n));
        c.require(rep.clusters.size() == static_cast<size_t>(n),
                  "C_" + std::to_string(n) + ": expected " + std::to_string(n) + " clusters, got " +
                      std::to_string(rep.clusters.size()));
        for (int k = 0; k < n && c.ok; ++k) {
            const Complex root = std::polar(1.0, 2.0 * kPi * k / n);
            const auto* cl = cluster_near(rep, root, 1e-8);
            std::ostringstream os;
            os << "C_" << n << ": root exp(2 pi i " << k << "/" << n << ")";
            c.require(cl != nullptr, os.str() + " missing");
            if (cl) c.require(cl->am == 2 && cl->gm == 2, os.str() + " has AM/GM != 2/2");
        }
    }
    return c;
}

// 4. Zero multiplicities: AM(0) = 2 s1 and GM(0) = n1 on paw and karate.
Check criterion_zero_ledger() {
    Check c;
    for (const char* name : {"paw", "karate"}) {
        Graph g = testsupport::load_corpus(name);
        nbs::ShellDecomposition sd(g);
        auto rep = nbs::compute_spectrum(g);
        const auto* zc = zero_cluster(rep);
        c.require(zc != nullptr, std::string(name) + ": no zero cluster");
        if (!zc) return c;
        c.require(zc->am == 2 * sd.s1(), std::string(name) + ": AM(0) != 2 s1");
        c.require(zc->gm == sd.n1(), std::string(name) + ": GM(0) != n1");
        if (std::string(name) == "karate") {
            c.require(zc->am == 2, "karate: AM(0) != 2");
            c.require(zc->gm == 1, "karate: GM(0) != 1");
        }
    }
    return c;
}

// 5. Determinant identity between B and the degree-corrected companion form.
Check criterion_ihara_bass() {
    Check c;
    std::mt19937_64 rng(55);
    for (const auto& name : kCorpus) {
        Graph g = testsupport::load_corpus(name);
        auto rep = nbs::verify_ihara_bass(g, sample_points(rng, 20));
        c.require(rep.used >= 15, name + ": too few usable sample points");
        if (rep.max_residual > 1e-8) {
            std::ostringstream os;
            os << name << ": residual " << rep.max_residual;
            c.require(false, os.str());
        }
        if (!c.ok) break;
    }
    return c;
}

// 6. GM(1) = m - n + 1 when the cycle space has dimension >= 2; GM(-1) by parity.
Check criterion_pm1_ledger() {
    Check c;
    auto gm_at = [](const Graph& g, double mu) {
        nbs::NBOperator nb(g);
        Eigen::MatrixXd shifted =
            nb.dense() - mu * Eigen::MatrixXd::Identity(g.num_oriented(), g.num_oriented());
        return g.num_oriented() - nbs::numerical_rank(shifted, 1e-8).rank;
    };
    for (const std::string name : {"k4", "k33", "bowtie", "fig4b-collars", "diamond", "karate"}) {
        Graph g = testsupport::load_corpus(name);
        const int want = g.num_edges() - g.num_nodes() + 1;
        const int got = gm_at(g, 1.0);
        if (got != want) {
            c.require(false, name + ": GM(1) = " + std::to_string(got) + ", expected " +
                                 std::to_string(want));
            return c;
        }
        if (name == "karate") c.require(got == 45, "karate: GM(1) != 45");
    }
    c.require(gm_at(testsupport::load_corpus("k33"), -1.0) == 4, "k33: GM(-1) != 4");
    c.require(gm_at(testsupport::load_corpus("karate"), -1.0) == 44, "karate: GM(-1) != 44");
    c.require(gm_at(testsupport::load_corpus("bowtie"), -1.0) == 1, "bowtie: GM(-1) != 1");
    return c;
}

// 7. Unit eigenvalues are roots of unity of order <= 2m with GM = AM and
//    non-leaky eigenvectors; every other nonzero eigenpair leaks.
Check criterion_unit_structure() {
    Check c;
    for (const auto& name : kCorpusMd2) {
        Graph g = testsupport::load_corpus(name);
        auto rep = nbs::compute_spectrum(g);
        for (const auto& cl : rep.clusters) {
            if (cl.is_zero || cl.cls != nbs::EigClass::unit) continue;
            c.require(cl.unit_order >= 1 && cl.unit_order <= 2 * g.num_edges(),
                      name + ": unit cluster is not a root of unity of order <= 2m");
            c.require(cl.gm == cl.am, name + ": unit cluster with GM != AM");
        }
        auto dec = nbs::eig(nbs::NBOperator(g).dense());
        for (int i = 0; i < dec.eigenvalues.size(); ++i) {
            const double mod = std::abs(dec.eigenvalues[i]);
            if (mod <= 0.5) continue;
            const bool unit = std::abs(mod - 1.0) <= 1e-6;
            const bool leaky = nbs::is_leaky(g, dec.right.col(i), 1e-8).leaky;
            if (unit)
                c.require(!leaky, name + ": unit eigenvector leaks");
            else
                c.require(leaky, name + ": non-unit eigenvector does not leak");
        }
        if (!c.ok) break;
    }
    return c;
}

// 8. Motif-based predictions match the rank computations, and the raw-count
//    versus independent-span discrepancy is reported rather than failed.
Check criterion_motifs() {
    Check c;
    Graph bowtie = testsupport::load_corpus("bowtie");
    auto rep = nbs::compute_spectrum(bowtie);
    for (int sgn : {1, -1}) {
        const auto* c3 = cluster_near(rep, std::polar(1.0, sgn * 2.0 * kPi / 3.0));
        c.require(c3 && c3->gm == 2, "bowtie: GM at a primitive cube root != 2");
        const auto* c6 = cluster_near(rep, std::polar(1.0, sgn * kPi / 3.0));
        c.require(c6 && c6->gm == 1, "bowtie: GM at a primitive sixth root != 1");
    }
    auto pred = nbs::predict_unit_spectrum(bowtie);
    const auto* r3 = pred.row_for(3);
    c.require(r3 && r3->independent_gm == 2, "bowtie: predicted span at order 3 != 2");
    const auto* r6 = pred.row_for(6);
    c.require(r6 && r6->independent_gm == 1, "bowtie: predicted span at order 6 != 1");

    Graph fig = testsupport::load_corpus("fig4b-collars");
    auto fpred = nbs::predict_unit_spectrum(fig);
    const auto* r4 = fpred.row_for(4);
    c.require(r4 && r4->raw_gm == 3, "overlapping collars: raw motif count at order 4 != 3");
    c.require(r4 && r4->independent_gm == 2, "overlapping collars: independent span != 2");

    auto frep = nbs::compute_spectrum(fig);
    bool discrepancy_noted = false;
    for (const auto& row : frep.ledger)
        if (row.label == "GM(unit r=4)" && row.match && !row.note.empty())
            discrepancy_noted = true;
    c.require(discrepancy_noted,
              "overlapping collars: raw-vs-span discrepancy was not reported as a note");
    return c;
}

// 9. No nonzero eigenvalue strictly inside the unit circle when the minimum
//    degree is 2 and the cycle space has dimension >= 2.
Check criterion_no_inner() {
    Check c;
    for (const auto& name : kCorpusMd2Multi) {
        auto rep = nbs::compute_spectrum(testsupport::load_corpus(name));
        for (const auto& cl : rep.clusters) {
            const double mod = std::abs(cl.centroid);
            if (mod > 1e-8 && mod < 1.0 - 1e-6) {
                std::ostringstream os;
                os << name << ": cluster at modulus " << mod;
                c.require(false, os.str());
            }
        }
        if (!c.ok) break;
    }
    return c;
}

// 10. Leading eigenvalues: k33 has {rho, -rho} with period 2; k4 and bowtie
//     are claimed to have a unique simple positive leading eigenvalue.
Check criterion_leading() {
    Check c;
    Graph k33 = testsupport::load_corpus("k33");
    auto lk33 = nbs::leading_report(k33);
    c.require(lk33.nu == 2 && lk33.leading.size() == 2, "k33: leading set is not a pair");
    if (lk33.leading.size() == 2) {
        std::vector<Complex> want{Complex(lk33.rho, 0.0), Complex(-lk33.rho, 0.0)};
        c.require(nbs::detail::multiset_match_distance(lk33.leading, want) <= 1e-7,
                  "k33: leading pair is not {rho, -rho}");
    }
    c.require(lk33.all_simple, "k33: leading eigenvalues are not simple");

    for (const char* name : {"k4", "bowtie"}) {
        auto lr = nbs::leading_report(testsupport::load_corpus(name));
        if (lr.nu != 1 || lr.leading.size() != 1) {
            std::ostringstream os;
            os << name << ": expected a unique leading eigenvalue with period 1, computed period "
               << lr.nu << " with " << lr.leading.size()
               << " leading eigenvalues (the oriented-edge digraph of " << name
               << " is periodic, so the leading set is a full rotation orbit)";
            c.require(false, os.str());
            continue;
        }
        c.require(lr.all_simple && std::abs(lr.leading.front() - Complex(lr.rho, 0.0)) <= 1e-7,
                  std::string(name) + ": leading eigenvalue is not the simple positive one");
    }
    return c;
}

// 11. Two-block diagonalization: unitary unit block, bilinear non-unit block,
//     vanishing cross terms, and exact reconstruction.
Check criterion_diagonalization() {
    Check c;
    std::vector<std::pair<std::string, Graph>> cases;
    cases.emplace_back("c4", testsupport::load_corpus("c4"));
    cases.emplace_back("k4", testsupport::load_corpus("k4"));
    auto core = nbs::ShellDecomposition(testsupport::load_corpus("bowtie")).two_core();
    if (!core) {
        c.require(false, "bowtie: empty 2-core");
        return c;
    }
    cases.emplace_back("bowtie 2-core", *core);
    for (const auto& [name, g] : cases) {
        auto blocks = nbs::assemble_diagonalization(g);
        c.require(blocks.recon_residual <= 1e-6, name + ": reconstruction residual too large");
        c.require(blocks.qtpq_residual <= 1e-8, name + ": Q^T P Q deviates from identity");
        c.require(blocks.rstarr_residual <= 1e-8, name + ": R* R deviates from identity");
        c.require(blocks.qtpr_residual <= 1e-8 && blocks.rstarq_residual <= 1e-8,
                  name + ": cross block above 1e-8");
        if (!c.ok) break;
    }
    return c;
}

// 12. Node addition: the bisection root matches the direct leading eigenvalue
//     of the extended operator, the detour spectrum certificate holds, and
//     attaching to all of K4 gives exactly 3.
Check criterion_perturbation() {
    Check c;
    std::mt19937_64 rng(1234);
    for (int trial = 0; trial < 20 && c.ok; ++trial) {
        const int n = 6 + static_cast<int>(rng() % 15);
        const int chords = 1 + static_cast<int>(rng() % 3);
        Graph host = testsupport::random_md2_host(n, chords, rng);
        const int d = 2 + static_cast<int>(rng() % 3);
        std::vector<int> nodes(host.num_nodes());
        std::iota(nodes.begin(), nodes.end(), 0);
        std::shuffle(nodes.begin(), nodes.end(), rng);
        std::vector<int> attach(nodes.begin(), nodes.begin() + std::min(d, host.num_nodes()));

        auto probe = nbs::run_probe(host, attach, 3000u + trial, false);
        const std::string tag = "probe " + std::to_string(trial);
        c.require(probe.lambda_c > probe.lambda, tag + ": lambda_c is not above lambda");
        c.require(probe.direct_gap <= 1e-6, tag + ": bisection disagrees with the direct value");
        c.require(std::isfinite(probe.yx_eigen_gap) && probe.yx_eigen_gap <= 1e-6,
                  tag + ": -lambda_c^2 is not an eigenvalue of Y X");
        c.require(probe.alpha11 >= 0.0, tag + ": alpha11 < 0");
        c.require(probe.det_identity_max_rel <= 1e-8, tag + ": determinant identity residual");
    }
    auto k4probe = nbs::run_probe(testsupport::load_corpus("k4"), {0, 1, 2, 3}, 77u, false);
    c.require(std::abs(k4probe.lambda_c - 3.0) <= 1e-6, "k4 full attachment: lambda_c != 3");
    return c;
}

// 13. B B^{-1} = I in exact integer arithmetic wherever the closed-form
//     inverse applies.
Check criterion_inverse() {
    Check c;
    for (const auto& name : kCorpusMd2)
        c.require(nbs::NBOperator(testsupport::load_corpus(name)).check_inverse_exact(),
                  name + ": exact inverse check failed");
    return c;
}

}  // namespace

int main() {
    struct Entry {
        const char* label;
        Check (*fn)();
    };
    const Entry entries[] = {
        {"walk counts match the brute-force oracle", criterion_walks},
        {"trees are nilpotent and defective at zero", criterion_trees},
        {"cycle spectra are doubled roots of unity", criterion_cycles},
        {"zero multiplicities follow the 1-shell", criterion_zero_ledger},
        {"determinant identity holds on the corpus", criterion_ihara_bass},
        {"multiplicities at +1 and -1 match the cycle space", criterion_pm1_ledger},
        {"unit eigenpairs are non-leaky roots of unity", criterion_unit_structure},
        {"motif predictions match rank computations", criterion_motifs},
        {"no nonzero spectrum strictly inside the unit circle", criterion_no_inner},
        {"leading eigenvalue structure", criterion_leading},
        {"two-block diagonalization reassembles the operator", criterion_diagonalization},
        {"node addition raises the leading eigenvalue as certified", criterion_perturbation},
        {"closed-form inverse is exact", criterion_inverse},
    };

    int failures = 0;
    for (size_t i = 0; i < std::size(entries); ++i) {
        Check c;
        try {
            c = entries[i].fn();
        } catch (const std::exception& e) {
            c.ok = false;
            c.why = std::string("exception: ") + e.what();
        }
        if (c.ok) {
            std::printf("PASS criterion %2zu: %s\n", i + 1, entries[i].label);
        } else {
            std::printf("FAIL criterion %2zu: %s (%s)\n", i + 1, entries[i].label, c.why.c_str());
            ++failures;
        }
    }
    if (failures == 0)
        std::printf("acceptance: all %zu criteria passed\n", std::size(entries));
    else
        std::printf("acceptance: %d of %zu criteria failed\n", failures, std::size(entries));
    return failures == 0 ? 0 : 1;
}
