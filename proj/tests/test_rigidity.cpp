#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "semilin/rigidity.hpp"

using namespace semilin;

namespace {

IntegratorConfig range(double a, double b) { return IntegratorConfig{}.with_range(a, b); }

/// W(u, t) = -c u^2 g(t) + d g(t) on |u| < U, g a unit bump on t in (0, 1.1).
/// W_uu = -2 c g <= 0 everywhere.
LogPotential concave_strip(double c, double d, double U = 50.0) {
    const auto g = make_bump(0.55, 0.55, 1.0);
    LogPotential w;
    w.value = [=](double u, double t) { return (d - c * u * u) * g(t); };
    w.du = [=](double u, double t) { return -2 * c * u * g(t); };
    w.duu = [=](double, double t) { return -2 * c * g(t); };
    w.dt = [=](double u, double t) { return (d - c * u * u) * g.jet(t).d1; };
    w.u_bound = U;
    w.T = g.upper();
    w.t_lower = g.lower();
    w.description = "concave strip";
    w.K = k_constant(w, 64);
    return w;
}

std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i) v[i] = a + (b - a) * i / (n - 1);
    return v;
}

}  // namespace

TEST(ConjugateScan, FreeMotionHasNoFindings) {
    const auto w = to_log_form(make_zero_potential(), 4);
    const auto [u, p] = default_scan_grids(w, 9);
    const auto res = conjugate_point_scan(w, u, p, -2.0, 10.0, IntegratorConfig{}, {4, 2});
    EXPECT_TRUE(res.findings.empty());
    EXPECT_TRUE(res.failures.empty());
    EXPECT_EQ(res.cells, 81u);
}

TEST(ConjugateScan, NonpositiveCurvatureHasNoFindings) {
    const auto w = concave_strip(0.2, 0.0);
    EXPECT_EQ(w.K, 0.0);
    const auto res =
        conjugate_point_scan(w, linspace(-1, 1, 9), linspace(-2, 2, 9), -1.0, w.T + 10, IntegratorConfig{}, {6, 4});
    EXPECT_TRUE(res.findings.empty());
    EXPECT_TRUE(res.failures.empty());
}

TEST(ConjugateScan, AttractiveBumpHasVerifiedFindings) {
    const auto w = fixtures::attractive_bump();
    // Frozen oscillator comparison: K^2 e^{2T} (width)^2 well above pi^2.
    ASSERT_GT(w.K * w.K * std::exp(2 * w.T) * w.T * w.T, std::numbers::pi * std::numbers::pi);
    const auto res = conjugate_point_scan(w, linspace(-0.5, 0.5, 5), linspace(-0.5, 0.5, 5), -1.0, w.T + 10,
                                          IntegratorConfig{}, {6, 4});
    ASSERT_FALSE(res.findings.empty());
    for (const auto& f : res.findings) {
        EXPECT_LT(f.t1, f.t2);
        EXPECT_LE(verify_finding(w, f, IntegratorConfig{}), 1e-6);
    }
}

TEST(ConjugateScan, RejectsBadInput) {
    const auto w = to_log_form(make_zero_potential(), 4);
    EXPECT_THROW(conjugate_point_scan(w, {0.0}, {0.0}, 1.0, 1.0, IntegratorConfig{}), InvalidParameter);
    EXPECT_THROW(conjugate_point_scan(w, {}, {0.0}, 0.0, 1.0, IntegratorConfig{}), InvalidParameter);
}

TEST(Gibbs, FreeValues) {
    const auto w = to_log_form(make_zero_potential(), 4);
    EXPECT_EQ(gibbs_density(w, {0.3, 0.0, -1.0}), 1.0);
    EXPECT_DOUBLE_EQ(gibbs_density(w, {0.3, 2.0, -1.0}), std::exp(-2.0));
}

TEST(Gibbs, LogRateAlongFlow) {
    const auto w = fixtures::attractive_bump(-3.0, 64);
    const auto traj = integrate_hamiltonian(w, {0.1, 0.2, -0.5}, range(-0.5, 2.0));
    for (double t = -0.4; t < 1.9; t += 0.05) {
        const double d = oracle::five_point_diff(
            [&](double s) { return std::log(gibbs_density(w, traj.at(s))); }, t, 1e-3);
        const auto s = traj.at(t);
        const double e2t = std::exp(2 * t);
        const double expected = -e2t * (2 * w.W(s.u, t) + w.Wt(s.u, t));
        EXPECT_NEAR(d, expected, 1e-6 * std::max(1.0, std::abs(expected))) << t;
    }
}

TEST(Gibbs, PositiveAndBounded) {
    const auto w = fixtures::attractive_bump();
    double inf_w = 0.0;
    for (double t = 0.0; t <= w.T; t += 0.01)
        for (double u = -1.0; u <= 1.0; u += 0.01) inf_w = std::min(inf_w, std::exp(2 * t) * w.W(u, t));
    for (double t = 0.0; t <= w.T; t += 0.05)
        for (double u = -1.0; u <= 1.0; u += 0.05) {
            const double a = gibbs_density(w, {u, 0.0, t});
            EXPECT_GT(a, 0.0);
            EXPECT_LE(a, std::exp(-inf_w) * (1 + 1e-12));
        }
}

TEST(InequalitySides, ZeroPotential) {
    const auto s = rescaled_inequality_sides(to_log_form(make_zero_potential(), 4), 1);
    EXPECT_EQ(s.lhs, 0.0);
    EXPECT_EQ(s.rhs, 0.0);
    const auto d = discriminant_inequality_check(to_log_form(make_zero_potential(), 4));
    EXPECT_EQ(d.lhs, 0.0);
    EXPECT_EQ(d.rhs, 0.0);
    EXPECT_TRUE(d.holds);
}

TEST(InequalitySides, MatchFixedGridSimpsonAtNOne) {
    const auto w = fixtures::attractive_bump(-2.0, 64);
    const auto s = rescaled_inequality_sides(w, 1);
    auto lhs_f = [&](double t, double v) {
        const double e2t = std::exp(2 * t);
        const double g = e2t * w.Wu(v, t);
        return std::exp(-e2t * w.W(v, t)) * g * g;
    };
    auto rhs_f = [&](double t, double v) {
        const double e2t = std::exp(2 * t);
        const double g = e2t * (2 * w.W(v, t) + w.Wt(v, t));
        return std::exp(-e2t * w.W(v, t)) * g * g;
    };
    const double lhs = 4 * oracle::simpson_2d(lhs_f, 0.0, w.T, -1.0, 1.0, 400, 400);
    const double rhs = oracle::simpson_2d(rhs_f, 0.0, w.T, -1.0, 1.0, 400, 400);
    EXPECT_NEAR(s.lhs, lhs, 1e-6 * lhs);
    EXPECT_NEAR(s.rhs, rhs, 1e-6 * rhs);
}

TEST(InequalitySides, DiscriminantSharesIntegrals) {
    const auto w = fixtures::attractive_bump(-2.0, 64);
    const auto s = rescaled_inequality_sides(w, 1);
    const auto d = discriminant_inequality_check(w);
    const double g = std::sqrt(2 * std::numbers::pi);
    EXPECT_NEAR(d.lhs, g * s.lhs, 1e-10 * d.lhs);
    EXPECT_NEAR(d.rhs, g * s.rhs, 1e-10 * d.rhs);
    EXPECT_EQ(d.holds, s.lhs <= s.rhs);
    EXPECT_THROW(rescaled_inequality_sides(w, 0.5), InvalidParameter);
}

TEST(InequalitySides, WitnessBumpFailsDiscriminantAndHasFindings) {
    const auto w = fixtures::witness_bump();
    const auto d = discriminant_inequality_check(w);
    EXPECT_FALSE(d.holds);
    EXPECT_EQ(find_crossover(w), 1);
    const auto res = conjugate_point_scan(w, linspace(-0.3, 0.3, 5), linspace(-0.5, 0.5, 5), -1.0, w.T + 10,
                                          IntegratorConfig{}, {6, 4});
    ASSERT_FALSE(res.findings.empty());
    for (const auto& f : res.findings) EXPECT_LE(verify_finding(w, f, IntegratorConfig{}), 1e-6);
}

TEST(InequalitySides, WideBumpHoldsAtNOneButCrossesLater) {
    const auto w = fixtures::attractive_bump(-2.0, 64);
    EXPECT_TRUE(discriminant_inequality_check(w).holds);
    EXPECT_EQ(find_crossover(w), 2);
}

TEST(ScalingFit, SlopesMatchOrders) {
    const auto w = fixtures::attractive_bump(-2.0, 64);
    const auto fit = scaling_exponent_fit(w, {4, 8, 16, 32}, 1e-10, 4);
    EXPECT_FALSE(fit.identically_zero);
    EXPECT_NEAR(fit.slope_lhs, -3.0, 0.15);
    EXPECT_NEAR(fit.slope_rhs, -5.0, 0.15);
    for (const auto& s : fit.sides) {
        EXPECT_GE(s.lhs, 0.0);
        EXPECT_GE(s.rhs, 0.0);
    }
}

TEST(ScalingFit, CrossoverExistsAndPersists) {
    const auto w = fixtures::attractive_bump(-0.5, 64);
    const auto N = find_crossover(w);
    ASSERT_TRUE(N.has_value());
    for (int k : {*N, *N + 1, 2 * *N, 4 * *N}) {
        const auto s = rescaled_inequality_sides(w, k);
        EXPECT_GT(s.lhs, s.rhs) << k;
    }
    if (*N > 1) {
        const auto s = rescaled_inequality_sides(w, *N - 1);
        EXPECT_LE(s.lhs, s.rhs);
    }
    const auto fit = scaling_exponent_fit(w, {1, 2, 4, 8 * *N});
    ASSERT_TRUE(fit.crossover_N.has_value());
    EXPECT_LE(*fit.crossover_N, 8 * *N);
}

TEST(ScalingFit, ZeroPotentialIsFlagged) {
    const auto fit = scaling_exponent_fit(to_log_form(make_zero_potential(), 4), {1, 2, 4});
    EXPECT_TRUE(fit.identically_zero);
    EXPECT_FALSE(fit.crossover_N.has_value());
}

TEST(ScalingFit, DegenerateAndBadInput) {
    // u-independent W has W_u = 0, so the 4-side vanishes.
    EXPECT_THROW(scaling_exponent_fit(concave_strip(0.0, 1.0), {1, 2, 4}), DegenerateFit);
    const auto w = fixtures::attractive_bump(-2.0, 64);
    EXPECT_THROW(scaling_exponent_fit(w, {1, 2}), InvalidParameter);
    EXPECT_THROW(scaling_exponent_fit(w, {1, 4, 2}), InvalidParameter);
}

TEST(ScalingFit, NormalizedSidesConverge) {
    const auto w = fixtures::attractive_bump(-2.0, 64);
    const auto a = rescaled_inequality_sides(w, 64);
    const auto b = rescaled_inequality_sides(w, 128);
    const double la = a.lhs * std::pow(64, 3), lb = b.lhs * std::pow(128, 3);
    const double ra = a.rhs * std::pow(64, 5), rb = b.rhs * std::pow(128, 5);
    EXPECT_LT(std::abs(lb - la) / lb, 1e-3);
    EXPECT_LT(std::abs(rb - ra) / rb, 1e-3);
}
