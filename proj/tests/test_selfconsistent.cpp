#include <catch_amalgamated.hpp>

#include <numbers>
#include <random>

#include "oracles.hpp"
#include "prodspec/selfconsistent.hpp"

using namespace prodspec;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// (z, w) with |z| in [1.1, 6] and w in S_0 = {0 <= E <= lambda_-/2, 0 < eta <= 1}
std::pair<cplx, cplx> random_s0_point(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const cplx z = std::polar(1.1 + 4.9 * u(rng), 2.0 * std::numbers::pi * u(rng));
    const double E = u(rng) * oracle::lambda_minus(std::abs(z)) / 2.0;
    const double eta = std::pow(10.0, -4.0 + 4.0 * u(rng));
    return {z, cplx{E, eta}};
}

}  // namespace

TEST_CASE("cubic roots agree with Durand-Kerner") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g;
    for (int t = 0; t < 200; ++t) {
        const cplx a3{g(rng), g(rng)}, a2{g(rng), g(rng)}, a1{g(rng), g(rng)}, a0{g(rng), g(rng)};
        const auto r = cubic_roots(a3, a2, a1, a0);
        const auto ref = oracle::durand_kerner({a0, a1, a2, a3});
        CHECK(oracle::multiset_distance({r.begin(), r.end()}, ref) < 1e-9);
    }
    const auto known = cubic_roots(1.0, -6.0, 11.0, -6.0);
    CHECK(oracle::multiset_distance({known.begin(), known.end()}, {1.0, 2.0, 3.0}) < 1e-12);
    const auto triple = cubic_roots(1.0, -3.0, 3.0, -1.0);  // (t - 1)^3
    for (const auto& x : triple) CHECK(std::abs(x - 1.0) < 1e-5);
    CHECK_THROWS_AS(cubic_roots(0.0, 1.0, 1.0, 1.0), degenerate_error);
}

TEST_CASE("m_c at large |w| behaves like -1/w") {
    const cplx w{0.0, 1e6};
    const auto s = solve_mc(2.0, w);
    CHECK(std::abs(s.m_c + 1.0 / w) <= 1e-10);
}

TEST_CASE("m_c agrees with an independent root finder") {
    const cplx z{1.5, 0.0}, w{0.05, 0.01};
    const auto s = solve_mc(z, w);
    const auto ref = oracle::admissible_mc(z, w);
    REQUIRE(ref.size() == 1);
    CHECK(std::abs(s.m_c - ref.front()) <= 1e-10);
    CHECK(s.residual <= 1e-10);
    CHECK(s.m_c.imag() > 0.0);
}

TEST_CASE("exactly one admissible root on S_0") {
    std::mt19937_64 rng(11);
    int two_upper = 0;
    for (int t = 0; t < 1000; ++t) {
        const auto [z, w] = random_s0_point(rng);
        const auto census = root_census(z, w);
        CHECK(census.admissible == 1);
        two_upper += census.upper == 2 ? 1 : 0;
        const auto s = solve_mc(z, w);
        CHECK(s.residual <= 1e-10);
        CHECK(s.m_c.imag() > 0.0);
        const auto ref = oracle::admissible_mc(z, w);
        REQUIRE(ref.size() == 1);
        CHECK(std::abs(s.m_c - ref.front()) <= 1e-9 * std::max(1.0, std::abs(ref.front())));
    }
    // Im m > 0 alone does not single out the root on S_0
    CHECK(two_upper > 0);
}

TEST_CASE("admissible root matches continuation from large |w|") {
    // walk from w = 10i down to each target; the continued root is the Stieltjes branch
    std::mt19937_64 rng(5);
    for (int t = 0; t < 20; ++t) {
        const auto [z, target] = random_s0_point(rng);
        std::vector<cplx> path;
        const cplx start{target.real(), 10.0};
        // geometric approach in eta keeps the steps small relative to |m| variation
        const int steps = 4000;
        for (int k = 0; k <= steps; ++k) {
            const double frac = static_cast<double>(k) / steps;
            path.emplace_back(target.real(), start.imag() * std::pow(target.imag() / start.imag(), frac));
        }
        const auto track = branch_continuation(z, path);
        CHECK(std::abs(track.back().m_c - solve_mc(z, target).m_c) < 1e-9);
    }
}

TEST_CASE("solve_mc rejects the real axis") {
    CHECK_THROWS_AS(solve_mc(1.5, cplx{0.1, 0.0}), prodspec::domain_error);
    CHECK_THROWS_AS(solve_mc(1.5, cplx{0.1, -1.0}), prodspec::domain_error);
}

TEST_CASE("support endpoints") {
    const auto one = support_endpoints(1.0);
    CHECK(one.a_frak == 3.0);
    CHECK(one.lambda_minus == 0.0);
    CHECK_THAT(one.lambda_plus, WithinAbs(6.75, 1e-12));
    const auto s = support_endpoints(1.5);
    CHECK_THAT(s.a_frak, WithinAbs(std::sqrt(19.0), 1e-15));
    CHECK_THAT(s.lambda_minus, WithinRel(oracle::lambda_minus(1.5), 1e-14));
    CHECK_THAT(s.lambda_minus, WithinAbs(0.09338, 1e-5));
    CHECK_THAT(s.lambda_plus, WithinAbs(9.2955, 1e-4));
    CHECK(support_endpoints(cplx{0.0, 1.5}).lambda_minus == s.lambda_minus);
    CHECK(support_endpoints(0.5).lambda_minus == 0.0);  // no gap inside the unit disk
    for (double r : {1.01, 1.2, 2.0, 4.0, 6.0}) {
        const auto e = support_endpoints(r);
        CHECK(e.lambda_minus > 0.0);
        CHECK(e.lambda_minus < e.lambda_plus);
    }
}

TEST_CASE("endpoints are where the density switches on") {
    for (double r : {1.2, 1.5, 3.0}) {
        const auto s = support_endpoints(r);
        const double gap = 0.02 * (s.lambda_plus - s.lambda_minus);
        INFO("|z| = " << r);
        CHECK(density(r, s.lambda_minus - std::min(gap, s.lambda_minus / 2), 1e-9) < 1e-4);
        CHECK(density(r, s.lambda_minus + gap) > 1e-3);
        CHECK(density(r, s.lambda_plus - gap) > 1e-3);
        CHECK(density(r, s.lambda_plus + gap, 1e-9) < 1e-4);
    }
}

TEST_CASE("density values and normalization") {
    const auto s = support_endpoints(1.5);
    CHECK(density(1.5, s.lambda_minus / 2.0, 1e-6) <= 1e-3);
    CHECK(density(1.5, (s.lambda_minus + s.lambda_plus) / 2.0, 1e-6) > 0.01);
    CHECK_THROWS_AS(density(1.5, 1.0, 1e-2), prodspec::domain_error);
    CHECK_THROWS_AS(density(1.5, 1.0, 1e-10), prodspec::domain_error);
    const double wide = integrate_density(1.5, s.lambda_minus - 0.1, s.lambda_plus + 0.1, 1000);
    CHECK(wide >= 0.99);
    CHECK(wide <= 1.01);
    for (double r : {1.2, 1.5, 3.0}) {
        const auto e = support_endpoints(r);
        const double mass = integrate_density(r, e.lambda_minus, e.lambda_plus, 1001);
        INFO("|z| = " << r);
        CHECK(mass >= 0.99);
        CHECK(mass <= 1.01);
    }
}

TEST_CASE("m_c residual") {
    std::mt19937_64 rng(19);
    for (int t = 0; t < 20; ++t) {
        const auto [z, w] = random_s0_point(rng);
        const auto m = solve_mc(z, w).m_c;
        CHECK(mc_residual(m, z, w) <= 1e-10);
        CHECK(mc_residual(m + 0.1, z, w) > 1e-3);
        // continuity off the poles
        const double base = mc_residual(m + 0.05, z, w);
        CHECK(std::abs(mc_residual(m + 0.05 + 1e-9, z, w) - base) < 1e-6);
    }
    CHECK_THROWS_AS(mc_residual(0.0, 1.5, cplx{0.1, 0.1}), degenerate_error);
    CHECK_THROWS_AS(mc_residual(-1.0, 1.5, cplx{0.1, 0.1}), degenerate_error);
}

TEST_CASE("edge behaviour below the lower edge") {
    const double etas[] = {1e-2, 1e-4, 1e-6};
    const double E0[] = {0.0};
    const auto at_zero = edge_asymptotics_check(1.5, E0, etas);
    CHECK(at_zero.preconditions_ok);
    CHECK(at_zero.worst_ratio_spread <= 2.0);

    const double lm = support_endpoints(1.5).lambda_minus;
    std::vector<double> Es;
    for (int k = 0; k <= 10; ++k) Es.push_back(lm / 2.0 * k / 10.0);
    const auto rep = edge_asymptotics_check(1.5, Es, etas);
    CHECK(rep.preconditions_ok);
    CHECK(rep.re_nonnegative);
    CHECK(rep.worst_ratio_spread <= 2.0);
    CHECK(rep.min_abs_re >= 0.1);
    CHECK(rep.max_abs_re <= 10.0);
    CHECK(rep.c_empirical > 0.0);

    const double E3[] = {support_endpoints(3.0).lambda_minus / 2.0};
    CHECK(solve_mc(3.0, cplx{E3[0], 1e-4}).m_c.real() > 0.0);
    CHECK(edge_asymptotics_check(3.0, E3, etas).re_nonnegative);

    const double outside[] = {lm};  // above lambda_- - tau0
    CHECK_FALSE(edge_asymptotics_check(1.5, outside, etas).preconditions_ok);
    CHECK_FALSE(edge_asymptotics_check(1.05, E0, etas).preconditions_ok);
}

TEST_CASE("branch continuation") {
    const std::vector<cplx> constant(5, cplx{0.3, 0.4});
    const auto c = branch_continuation(1.5, constant);
    for (const auto& s : c) CHECK(s.m_c == c.front().m_c);

    std::vector<cplx> path;
    for (int k = 0; k <= 200; ++k) path.emplace_back(1.0, 1.0 + (0.001 - 1.0) * k / 200.0);
    const auto track = branch_continuation(1.5, path);
    CHECK(std::abs(track.back().m_c - solve_mc(1.5, cplx{1.0, 0.001}).m_c) <= 1e-10);
    for (std::size_t k = 0; k < path.size(); ++k)
        CHECK(std::abs(track[k].m_c - solve_mc(1.5, path[k]).m_c) <= 1e-10);

    std::vector<cplx> along;
    const double top = support_endpoints(1.5).lambda_plus + 1.0;
    for (double E = 0.0; E <= top; E += 0.01) along.emplace_back(E, 1e-4);
    std::vector<SelfConsistentSolution> sweep;
    CHECK_NOTHROW(sweep = branch_continuation(1.5, along));
    for (std::size_t k = 0; k < along.size(); k += 37)
        CHECK(std::abs(sweep[k].m_c - solve_mc(1.5, along[k]).m_c) <= 1e-9);

    const std::vector<cplx> jumpy{cplx{0.1, 0.5}, cplx{0.5, 0.5}};
    CHECK_THROWS_AS(branch_continuation(1.5, jumpy), config_error);
}

TEST_CASE("spectral window") {
    const auto win = SpectralWindow::below_edge(1.5, 1e-3);
    CHECK_THAT(win.E_max, WithinRel(oracle::lambda_minus(1.5) / 2.0, 1e-14));
    CHECK(win.contains(cplx{0.0, 1.0}));
    CHECK_FALSE(win.contains(cplx{0.05, 0.5}));
    CHECK_FALSE(win.contains(cplx{0.01, 2.0}));
    const auto g = win.grid(3, 4);
    REQUIRE(g.size() == 12);
    for (const auto& w : g) CHECK(win.contains(w));
    CHECK_THAT(g.back().imag(), WithinRel(1.0, 1e-14));
    CHECK_THAT(g.front().imag(), WithinRel(1e-3, 1e-14));
}

TEST_CASE("m_c and 1 + m_c stay bounded on the window") {
    for (double r : {1.2, 1.5, 3.0, 6.0}) {
        const auto grid = SpectralWindow::below_edge(r, 1e-4).grid(5, 9);
        const auto rep = stability_bounds(r, grid);
        INFO("|z| = " << r);
        CHECK(std::isfinite(rep.C));
        CHECK(rep.C < 100.0);
        CHECK(rep.min_abs_m > 0.0);
    }
}
