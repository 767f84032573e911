#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "semilin/ode.hpp"

using namespace semilin;

namespace {

Vec<2> oscillator(double, const Vec<2>& y) { return {y[1], -y[0]}; }

}  // namespace

TEST(Dopri5, HarmonicOscillatorEndpoint) {
    IntegratorConfig cfg;
    const auto run = dopri5<2>(oscillator, 0.0, {1.0, 0.0}, 10.0, cfg);
    EXPECT_NEAR(run.y_end[0], std::cos(10.0), 1e-8);
    EXPECT_NEAR(run.y_end[1], -std::sin(10.0), 1e-8);
    EXPECT_EQ(run.t_end, 10.0);
}

TEST(Dopri5, AgreesWithFineRK4) {
    auto f = [](double t, const Vec<2>& y) -> Vec<2> {
        return {y[1], -std::sin(y[0]) + 0.3 * std::cos(t)};
    };
    IntegratorConfig cfg;
    const auto run = dopri5<2>(f, 0.0, {0.4, -0.1}, 6.0, cfg);
    const auto ref = oracle::rk4<2>(f, 0.0, {0.4, -0.1}, 6.0, 60000);
    EXPECT_NEAR(run.y_end[0], ref[0], 1e-8);
    EXPECT_NEAR(run.y_end[1], ref[1], 1e-8);
}

TEST(Dopri5, BackwardIntegration) {
    IntegratorConfig cfg;
    const auto run = dopri5<2>(oscillator, 0.0, {1.0, 0.0}, -3.0, cfg);
    EXPECT_NEAR(run.y_end[0], std::cos(-3.0), 1e-8);
    EXPECT_EQ(run.t_end, -3.0);
}

TEST(Dopri5, StopPredicateEndsEarly) {
    IntegratorConfig cfg;
    const auto run = dopri5<2>(oscillator, 0.0, {1.0, 0.0}, 10.0, cfg,
                               [](double, const Vec<2>& y) { return y[0] < 0.0; });
    EXPECT_TRUE(run.stopped);
    EXPECT_LT(run.t_end, std::numbers::pi / 2 + 0.06);
}

TEST(Dopri5, UnderflowRaisesIntegrationFailure) {
    // y' = y^2 blows up at t = 1.
    IntegratorConfig cfg;
    try {
        dopri5<1>([](double, const Vec<1>& y) -> Vec<1> { return {y[0] * y[0]}; }, 0.0, {1.0}, 2.0, cfg);
        FAIL() << "expected IntegrationFailure";
    } catch (const IntegrationFailure& e) {
        EXPECT_LT(e.last_t(), 1.0);
        EXPECT_GT(e.last_t(), 0.99);
        ASSERT_EQ(e.last_state().size(), 1u);
    }
}

TEST(DenseOutput, InterpolantAccuracyAtMidpoints) {
    IntegratorConfig cfg;
    cfg.max_step = 0.5;
    const auto sol = integrate_dense<2>(oscillator, 0.0, {1.0, 0.0}, -2.0, 5.0, cfg);
    const auto k = sol.knots();
    for (std::size_t i = 0; i + 1 < k.size(); ++i) {
        const double t = 0.5 * (k[i] + k[i + 1]);
        EXPECT_NEAR(sol(t)[0], std::cos(t), 1e-8) << t;
    }
    EXPECT_THROW(sol(5.5), InsufficientRange);
    EXPECT_DOUBLE_EQ(sol.t_min(), -2.0);
    EXPECT_DOUBLE_EQ(sol.t_max(), 5.0);
}

TEST(DenseOutput, SampleGridContainsKnotsAndRespectsSpacing) {
    IntegratorConfig cfg;
    const auto sol = integrate_dense<2>(oscillator, 0.0, {1.0, 0.0}, 0.0, 2.0, cfg);
    const auto g = sol.sample_grid(0.01);
    for (std::size_t i = 0; i + 1 < g.size(); ++i) {
        EXPECT_GT(g[i + 1], g[i]);
        EXPECT_LE(g[i + 1] - g[i], 0.01 + 1e-15);
    }
    for (double k : sol.knots()) EXPECT_TRUE(std::find(g.begin(), g.end(), k) != g.end());
}

TEST(IntegratorConfig, Validation) {
    IntegratorConfig cfg;
    cfg.rel_tol = 0;
    EXPECT_THROW(cfg.validate(), InvalidParameter);
    cfg = IntegratorConfig{};
    cfg.t_range = {1.0, 1.0};
    EXPECT_THROW(cfg.validate(), InvalidParameter);
    cfg = IntegratorConfig{}.tightened(0.5);
    EXPECT_DOUBLE_EQ(cfg.rel_tol, 5e-11);
}
