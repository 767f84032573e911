#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "semilin/potential.hpp"
#include "semilin/quadrature.hpp"

using namespace semilin;

TEST(Quadrature, PolynomialsAreExact) {
    const auto r = adaptive_simpson([](double x) { return x * x * x - 2 * x + 1; }, -1.0, 2.0);
    EXPECT_TRUE(r.converged);
    EXPECT_NEAR(r.value, 3.75 - 3.0 + 3.0, 1e-13);
}

TEST(Quadrature, ReversedBoundsFlipSign) {
    auto f = [](double x) { return std::exp(x); };
    EXPECT_NEAR(adaptive_simpson(f, 1.0, 0.0).value, -(std::exp(1.0) - 1.0), 1e-11);
    EXPECT_EQ(adaptive_simpson(f, 0.5, 0.5).value, 0.0);
}

TEST(Quadrature, MatchesGaussLegendreOnBump) {
    const auto b = make_bump(0.2, 0.7, 1.3);
    auto f = [&](double x) { return b(x) * std::cos(3 * x); };
    const double ref = oracle::gauss(f, b.lower(), b.upper(), 200, 20);
    const auto r = adaptive_simpson(f, -2.0, 2.0, {}, {b.lower(), b.upper()});
    EXPECT_TRUE(r.converged);
    EXPECT_NEAR(r.value, ref, 1e-10);
}

TEST(Quadrature, BreakpointsHandleKinks) {
    auto f = [](double x) { return std::abs(x - 0.3); };
    const double exact = 0.5 * 0.3 * 0.3 + 0.5 * 0.7 * 0.7;
    EXPECT_NEAR(adaptive_simpson(f, 0.0, 1.0, {}, {0.3}).value, exact, 1e-14);
}

TEST(Quadrature, IntegrateThrowsWhenDepthExhausted) {
    QuadratureOptions opt;
    opt.max_depth = 3;
    opt.min_depth = 1;
    opt.abs_tol = 1e-15;
    EXPECT_THROW(integrate([](double x) { return std::sqrt(x); }, 0.0, 1.0, opt), AccuracyError);
}

TEST(Quadrature, TwoDimensionalMatchesTensorSimpson) {
    auto f = [](double x, double y) { return std::exp(-x * x - 2 * y * y) * (1 + x * y); };
    const double ref = oracle::simpson_2d(f, -1, 2, -1.5, 1, 400, 400);
    QuadratureOptions opt;
    opt.abs_tol = 1e-11;
    const auto r = adaptive_simpson_2d(f, -1, 2, -1.5, 1, opt);
    EXPECT_TRUE(r.converged);
    EXPECT_NEAR(r.value, ref, 1e-9);
}

TEST(Extremum, GoldenSectionFindsQuadraticPeak) {
    const auto e = golden_maximize([](double x) { return -(x - 0.37) * (x - 0.37) + 2; }, -1, 3);
    EXPECT_NEAR(e.x, 0.37, 1e-7);
    EXPECT_NEAR(e.value, 2.0, 1e-14);
}

TEST(Extremum, GridMaximizeNeverBelowGrid) {
    auto f = [](double x) { return std::sin(7 * x) + 0.1 * x; };
    const int d = 33;
    double grid_best = -1e300;
    for (int i = 0; i < d; ++i) grid_best = std::max(grid_best, f(-2.0 + 4.0 * i / (d - 1)));
    const auto e = grid_maximize(f, -2.0, 2.0, d);
    EXPECT_GE(e.value, grid_best);
    EXPECT_THROW(grid_maximize(f, 0, 1, 1), InvalidParameter);
}
