#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "relpot/spectrum.hpp"

using namespace relpot;
using Catch::Approx;

TEST_CASE("particle in a box") {
    auto rep = schrodinger_eigs([](double) { return 0.0; }, 10.0, 0.01, 3);
    const double base = M_PI / 20.0;
    CHECK(rep.eigenvalues[0] == Approx(base * base).margin(1e-4));
    CHECK(rep.eigenvalues[1] == Approx(4 * base * base).margin(1e-3));
    CHECK(rep.eigenvalues[0] < rep.eigenvalues[1]);
    CHECK(rep.eigenvalues[1] < rep.eigenvalues[2]);
}

TEST_CASE("grid too coarse is rejected") {
    CHECK_THROWS_AS(schrodinger_eigs([](double) { return 0.0; }, 10.0, 0.2, 1), GridTooCoarse);
}

TEST_CASE("Poschl-Teller well: -2 sech^2 has ground state -1") {
    GramEvaluator g(ScatteringData::from({{1.0, 2.0}}));
    auto rep = schrodinger_eigs([&](double x) { return g.u(x); }, 15.0, 5e-3, 1);
    CHECK(rep.eigenvalues[0] == Approx(-1.0).margin(1e-3));
}

TEST_CASE("two-soliton bound states sit at -eta_j^2") {
    GramEvaluator g(ScatteringData::from({{1.0, 3.0}, {2.0, 5.0}}));
    auto rep = schrodinger_eigs([&](double x) { return g.u(x); }, 15.0, 5e-3, 2);
    CHECK(rep.eigenvalues[0] == Approx(-4.0).margin(1e-3));
    CHECK(rep.eigenvalues[1] == Approx(-1.0).margin(1e-3));
}

TEST_CASE("bound states of a forward-mapped measure") {
    auto s = forward_map(normalize_H({{1.0, 1.0}, {2.0, 1.0}}));
    GramEvaluator g(s);
    auto rep = schrodinger_eigs([&](double x) { return g.u(x); }, 15.0, 5e-3, 2);
    CHECK(rep.eigenvalues[0] == Approx(-(7.0 + std::sqrt(13.0)) / 2.0).margin(1e-3));
    CHECK(rep.eigenvalues[1] == Approx(-(7.0 - std::sqrt(13.0)) / 2.0).margin(1e-3));
}

TEST_CASE("eigenvalues converge at second order in h") {
    GramEvaluator g(ScatteringData::from({{1.0, 2.0}}));
    auto u = [&](double x) { return g.u(x); };
    const double e1 = schrodinger_eigs(u, 15.0, 1e-2, 1).eigenvalues[0];
    const double e2 = schrodinger_eigs(u, 15.0, 5e-3, 1).eigenvalues[0];
    const double err1 = std::fabs(e1 + 1.0), err2 = std::fabs(e2 + 1.0);
    const double ratio = err1 / err2;
    CHECK(ratio >= 3.5);
    CHECK(ratio <= 4.5);
}

TEST_CASE("spectral bound checks") {
    // n = 1 saturates the bound: eta^2 = p^2 + c^2 exactly
    auto single = verify_spectral_bound({normalize_H({{0.6, 0.64}})}, 0.05, 0.64);
    REQUIRE(single.size() == 1);
    CHECK(single[0].max_eta_sq == Approx(1.0).epsilon(1e-12));
    CHECK(single[0].algebraic_bound == Approx(1.0).epsilon(1e-12));
    CHECK(single[0].algebraic_ok);
    CHECK(single[0].fd_ok);

    auto pairm = verify_spectral_bound({normalize_H({{1.0, 1.0}, {2.0, 1.0}})}, 0.05, 2.0);
    CHECK(pairm[0].max_eta_sq == Approx((7.0 + std::sqrt(13.0)) / 2.0).epsilon(1e-10));
    CHECK(pairm[0].algebraic_bound == Approx(6.0));
    CHECK(pairm[0].algebraic_ok);
    CHECK(pairm[0].fd_ok);

    // discretization sequence of the uniform mass-1 density on [-1,1]
    auto uni = FiniteMeasure::make(AtomicMeasure{}, {-1.0, 1.0}, {0.5});
    std::vector<AtomicMeasure> seq;
    for (int n : {2, 4}) seq.push_back(discretize(uni, n));
    auto checks = verify_spectral_bound(seq, 0.05, 1.0);
    for (const auto& c : checks) {
        CHECK(c.algebraic_ok);
        CHECK(c.fd_ok);
        CHECK(c.fd_ground >= -2.05 - 1e-3);
    }
}
