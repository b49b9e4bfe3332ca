#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "nbs/addition.hpp"
#include "nbs/graph.hpp"
#include "nbs/linalg.hpp"
#include "nbs/nb_matrix.hpp"
#include "nbs/perturbation.hpp"
#include "nbs/spectrum.hpp"

#include "test_support.hpp"

using nbs::AdditionBlocks;
using nbs::Complex;
using nbs::Graph;
using nbs::NBOperator;
using testsupport::load_corpus;

TEST_CASE("addition blocks assemble to the extended operator") {
    struct Case {
        const char* name;
        std::vector<int> attach;
    };
    for (const Case& c : {Case{"bowtie", {1, 2}},
                          Case{"k4", {0, 1, 2, 3}},
                          Case{"paw", {0, 3}},
                          Case{"karate", {0, 11, 33}}}) {
        CAPTURE(c.name, c.attach);
        Graph host = load_corpus(c.name);
        AdditionBlocks ab = nbs::make_addition(host, c.attach);
        const int total = host.num_oriented() + 2 * ab.degree();
        REQUIRE(ab.extended.num_oriented() == total);

        Eigen::MatrixXd big = nbs::blocks_assembled(ab);
        Eigen::MatrixXd direct = NBOperator(ab.extended).dense();
        std::vector<int> perm = nbs::block_to_extended(ab);
        Eigen::MatrixXd permuted(total, total);
        for (int i = 0; i < total; ++i)
            for (int j = 0; j < total; ++j)
                permuted(perm[static_cast<size_t>(i)], perm[static_cast<size_t>(j)]) =
                    big(i, j);
        CHECK((permuted - direct).cwiseAbs().maxCoeff() == 0.0);

        // Structural identities: no walk re-enters the new node without
        // leaving first, and turnarounds cannot chain.
        CHECK((ab.d_block * ab.e_block).cwiseAbs().maxCoeff() == 0.0);
        CHECK((ab.f_block * ab.f_block).cwiseAbs().maxCoeff() == 0.0);
        CHECK((ab.x - ab.d_block * ab.f_block * ab.e_block).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("detour matrix entries follow the two-hop rule") {
    Graph host = load_corpus("bowtie");
    AdditionBlocks ab = nbs::make_addition(host, {1, 2});
    const std::vector<int> attach = ab.attach;
    for (int e = 0; e < host.num_oriented(); ++e)
        for (int f = 0; f < host.num_oriented(); ++f) {
            const int j = host.edge(e).src;
            const int k = host.edge(f).tgt;
            const bool j_in = std::find(attach.begin(), attach.end(), j) != attach.end();
            const bool k_in = std::find(attach.begin(), attach.end(), k) != attach.end();
            const double want = (j_in && k_in && j != k) ? 1.0 : 0.0;
            CHECK(ab.x(e, f) == want);
        }
}

TEST_CASE("perron rejects hosts without a unique positive leading pair") {
    CHECK_THROWS_AS(nbs::perron(load_corpus("c5")), nbs::PreconditionError);
    CHECK_THROWS_AS(nbs::perron(load_corpus("k33")), nbs::PreconditionError);
    CHECK_THROWS_AS(nbs::perron(load_corpus("paw")), nbs::PreconditionError);
    CHECK_THROWS_AS(nbs::perron(load_corpus("p3")), nbs::PreconditionError);
}

TEST_CASE("perron on K4: degree minus one, constant vector") {
    auto pr = nbs::perron(load_corpus("k4"));
    CHECK(pr.lambda == Catch::Approx(2.0).margin(1e-9));
    CHECK(pr.residual <= 1e-10 * 2.0);
    CHECK(pr.right.maxCoeff() - pr.right.minCoeff() <= 1e-9);
    CHECK(pr.right.minCoeff() > 0.0);
    CHECK(pr.left.dot(pr.right) == Catch::Approx(1.0).margin(1e-12));
    // Every node collects the same mass in a regular graph.
    CHECK(pr.nb_centrality.maxCoeff() - pr.nb_centrality.minCoeff() <= 1e-9);
}

TEST_CASE("perron matches the dense leading modulus on a period-three host") {
    Graph g = load_corpus("bowtie");
    auto pr = nbs::perron(g);
    auto ed = nbs::eig(NBOperator(g).dense_complex());
    double rho = 0.0;
    for (int i = 0; i < ed.eigenvalues.size(); ++i)
        rho = std::max(rho, std::abs(ed.eigenvalues[i]));
    CHECK(std::abs(pr.lambda - rho) <= 1e-8);
    CHECK(pr.right.minCoeff() > 0.0);
    CHECK(pr.left.minCoeff() > 0.0);
}

TEST_CASE("resolvent: zero input, closed-form inverse, Neumann tail") {
    Graph g = load_corpus("k4");
    NBOperator nb(g);
    const int n = g.num_oriented();

    Eigen::VectorXcd zero = Eigen::VectorXcd::Zero(n);
    CHECK(nbs::resolvent_apply(g, Complex(0.5, 0.2), zero).norm() == 0.0);

    Eigen::VectorXcd w(n);
    for (int i = 0; i < n; ++i) w[i] = Complex(std::cos(0.7 * i), std::sin(0.3 * i));

    // t = 0: the resolvent reduces to the closed-form inverse.
    Eigen::VectorXcd x0 = nbs::resolvent_apply(g, Complex(0.0, 0.0), w);
    Eigen::VectorXcd inv = nb.inverse_dense().cast<Complex>() * w;
    CHECK((x0 - inv).norm() <= 1e-10 * inv.norm());

    // |t| beyond the spectral radius: partial Neumann sums approach the solve.
    const Complex t(3.0, 0.0);
    Eigen::VectorXcd x = nbs::resolvent_apply(g, t, w);
    Eigen::VectorXcd cur = w;
    Eigen::VectorXcd acc = Eigen::VectorXcd::Zero(n);
    Complex tp = t;
    double prev_err = std::numeric_limits<double>::infinity();
    for (int p = 0; p < 60; ++p) {
        acc -= cur / tp;
        if (p % 15 == 14) {
            const double err = (acc - x).norm();
            CHECK(err < prev_err);
            prev_err = err;
        }
        cur = nb.apply(cur);
        tp *= t;
    }
    CHECK((acc - x).norm() <= 1e-8 * x.norm());

    // Spectral form through the full eigensystem agrees with the solve.
    const Complex ts(1.5, 0.3);
    auto ed = nbs::eig(nb.dense_complex(), true);
    Eigen::VectorXcd spectral = Eigen::VectorXcd::Zero(n);
    for (int i = 0; i < n; ++i) {
        const Complex coeff = (ed.left->row(i) * w)(0, 0) / (ed.eigenvalues[i] - ts);
        spectral += ed.right.col(i) * coeff;
    }
    Eigen::VectorXcd xs = nbs::resolvent_apply(g, ts, w);
    CHECK((spectral - xs).norm() <= 1e-8 * xs.norm());

    // A shift sitting on an eigenvalue is refused.
    CHECK_THROWS_AS(nbs::resolvent_apply(g, Complex(2.0, 0.0), w), nbs::NumericError);
}

TEST_CASE("y(t): negative, increasing, vanishing at infinity") {
    Graph host = load_corpus("bowtie");
    auto pr = nbs::perron(host);
    AdditionBlocks ab = nbs::make_addition(host, {1, 2});

    double prev = -std::numeric_limits<double>::infinity();
    for (double dt : {1e-3, 0.1, 0.5, 1.0, 2.0, 5.0}) {
        const double y = nbs::y_of_t(ab, pr.lambda, pr.lambda + dt);
        CHECK(y < 0.0);
        CHECK(y > prev);
        prev = y;
    }
    CHECK(nbs::y_of_t(ab, pr.lambda, pr.lambda + 100.0) > -0.01);
    CHECK_THROWS_AS(nbs::y_of_t(ab, pr.lambda, pr.lambda), nbs::PreconditionError);

    // Degree-one attachment: the detour matrix is empty and y vanishes.
    AdditionBlocks single = nbs::make_addition(host, {0});
    CHECK(single.x.cwiseAbs().maxCoeff() == 0.0);
    CHECK(nbs::y_of_t(single, pr.lambda, pr.lambda + 0.5) == 0.0);
}

TEST_CASE("full attachment on K4 lands exactly on the K5 eigenvalue") {
    Graph host = load_corpus("k4");
    auto probe = nbs::run_probe(host, {0, 1, 2, 3});
    CHECK(probe.lambda == Catch::Approx(2.0).margin(1e-9));
    CHECK(probe.lambda_c == Catch::Approx(3.0).margin(1e-9));
    CHECK(probe.lambda_c > probe.lambda);
    CHECK(probe.direct_gap <= 1e-6);
    CHECK(probe.yx_eigen_gap <= 1e-6);
    CHECK(probe.alpha11 >= 0.0);
    CHECK(probe.det_identity_max_rel <= 1e-8);
    CHECK(probe.eigen_drop == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("bowtie probe: perturbed eigenvalue beats the host and checks out") {
    auto probe = nbs::run_probe(load_corpus("bowtie"), {1, 2});
    CHECK(probe.lambda_c > probe.lambda);
    CHECK(probe.direct_gap <= 1e-6);
    CHECK(probe.yx_eigen_gap <= 1e-6);
    CHECK(probe.alpha11 >= -1e-12);
    CHECK(probe.det_identity_max_rel <= 1e-8);
    for (const auto& s : probe.y_samples) {
        CHECK(s.t > probe.lambda);
        CHECK(s.y < 0.0);
    }
    // Sorted by t, the y trace is nondecreasing: one sign change only.
    auto trace = probe.y_samples;
    std::sort(trace.begin(), trace.end(),
              [](const nbs::YSample& a, const nbs::YSample& b) { return a.t < b.t; });
    for (size_t i = 1; i < trace.size(); ++i) CHECK(trace[i].y >= trace[i - 1].y - 1e-9);
}

TEST_CASE("degree-one attachment only adds a zero pair") {
    Graph host = load_corpus("bowtie");
    auto probe = nbs::run_probe(host, {3});
    CHECK(probe.trivial);
    CHECK(probe.lambda_c == probe.lambda);
    CHECK(probe.eigen_drop == 0.0);
    CHECK(probe.direct_gap <= 1e-6);

    auto host_eig = nbs::eig(NBOperator(host).dense_complex());
    auto ext_eig = nbs::eig(NBOperator(probe.blocks.extended).dense_complex());
    std::vector<Complex> host_vals(host_eig.eigenvalues.data(),
                                   host_eig.eigenvalues.data() + host_eig.eigenvalues.size());
    host_vals.push_back(Complex(0.0, 0.0));
    host_vals.push_back(Complex(0.0, 0.0));
    std::vector<Complex> ext_vals(ext_eig.eigenvalues.data(),
                                  ext_eig.eigenvalues.data() + ext_eig.eigenvalues.size());
    REQUIRE(host_vals.size() == ext_vals.size());
    CHECK(nbs::detail::multiset_match_distance(host_vals, ext_vals) <= 1e-6);
}

TEST_CASE("random probes: bisection, direct value, and determinant identity agree") {
    std::mt19937_64 rng(424242);
    for (int trial = 0; trial < 5; ++trial) {
        const int n = 6 + static_cast<int>(rng() % 7);
        Graph host = testsupport::random_md2_host(n, 2, rng);
        if (host.is_cycle_graph() || nbs::is_bipartite(host)) continue;
        std::vector<int> attach;
        for (int k = 0; k < host.num_nodes() && attach.size() < 3; ++k)
            if (rng() % 2) attach.push_back(k);
        if (attach.size() < 2) attach = {0, 1};
        CAPTURE(n, attach);

        auto probe = nbs::run_probe(host, attach, 1000 + trial);
        CHECK(probe.lambda_c > probe.lambda);
        CHECK(probe.direct_gap <= 1e-6);
        CHECK(probe.yx_eigen_gap <= 1e-6);
        CHECK(probe.alpha11 >= -1e-12);
        CHECK(probe.det_identity_max_rel <= 1e-8);
    }
}

TEST_CASE("gershgorin disks: the root rides the leading disk") {
    Graph host = load_corpus("k4");
    auto probe = nbs::run_probe(host, {0, 1});
    REQUIRE(probe.disks.available);
    REQUIRE_FALSE(probe.disks.rows.empty());

    for (char flag : probe.disks.y_in_union) CHECK(flag == 1);

    // Near the leading eigenvalue the first disk alone holds y(t).
    CHECK(probe.disks.disk0_isolated.front() == 1);

    // At the largest sampled shift every disk stays within magnitude t^2.
    const double tmax = probe.disks.y_at.back().t;
    for (const auto& row : probe.disks.rows)
        if (row.t == tmax) CHECK(std::abs(row.center) + row.radius <= tmax * tmax);
}
