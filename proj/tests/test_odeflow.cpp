#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "semilin/odeflow.hpp"

using namespace semilin;

namespace {

RadialPotential bump_potential(double amp = 1.0) {
    return product_potential(make_bump(0, 1, amp), make_bump(2, 1, 1));
}

IntegratorConfig range(double a, double b) { return IntegratorConfig{}.with_range(a, b); }

}  // namespace

TEST(RadialIvp, FreeHarmonicInThreeDimensions) {
    const auto traj = integrate_radial_ivp(make_zero_potential(), 3, 1.0, 1.0, -1.0, range(-1, 2));
    EXPECT_NEAR(traj.u_at_radius(2.0), 0.5, 1e-10);
}

TEST(RadialIvp, FreeLogarithmInTwoDimensions) {
    const auto traj = integrate_radial_ivp(make_zero_potential(), 2, 1.0, 0.0, 1.0, range(0, 2));
    EXPECT_NEAR(traj.u_at_radius(std::exp(1.0)), 1.0, 1e-12);
}

TEST(RadialIvp, RejectsBadInput) {
    EXPECT_THROW(integrate_radial_ivp(make_zero_potential(), 3, 0.0, 1, 0, range(0, 1)), InvalidParameter);
    EXPECT_THROW(integrate_radial_ivp(make_zero_potential(), 1, 1.0, 1, 0, range(0, 1)), InvalidParameter);
}

TEST(RadialIvp, SelfConvergenceUnderHalvedTolerance) {
    const auto v = bump_potential(3.0);
    auto cfg = range(std::log(5.0), std::log(0.1));
    const auto a = integrate_radial_ivp(v, 3, 5.0, 0.4, -0.08, cfg);
    const auto b = integrate_radial_ivp(v, 3, 5.0, 0.4, -0.08, cfg.tightened(0.5));
    const double t = std::log(0.1);
    EXPECT_LT(std::abs(a.at(t).u - b.at(t).u), 10 * cfg.rel_tol);
    EXPECT_LT(std::abs(a.at(t).p - b.at(t).p), 10 * cfg.rel_tol);
}

TEST(RadialIvp, DenseOutputSatisfiesOdeAtMidpoints) {
    // Midpoint states are compared with a tight re-integration from the knot.
    const auto v = bump_potential(2.0);
    const auto w = to_log_form(v, 64);
    const auto cfg = range(-1.0, 1.5);
    const auto traj = integrate_radial_ivp(w, 3, 1.0, 0.2, 0.5, cfg);
    const auto knots = traj.dense().knots();
    double worst = 0.0;
    for (std::size_t i = 0; i + 1 < knots.size(); i += 7) {
        const double tm = 0.5 * (knots[i] + knots[i + 1]);
        const auto s0 = traj.at(knots[i]);
        const auto fine = dopri5<2>(flow_rhs(w, 3), knots[i], Vec<2>{s0.u, s0.p}, tm, cfg.tightened(1e-3));
        const auto s = traj.at(tm);
        worst = std::max({worst, std::abs(fine.y_end[0] - s.u), std::abs(fine.y_end[1] - s.p)});
    }
    EXPECT_LT(worst, 10 * cfg.rel_tol);
}

TEST(Hamiltonian, FreeMotionIsExact) {
    const auto w = to_log_form(make_zero_potential(), 4);
    const auto traj = integrate_hamiltonian(w, {0.0, 1.0, 0.0}, range(0, 5));
    EXPECT_DOUBLE_EQ(traj.at(5.0).u, 5.0);
    EXPECT_EQ(traj.at(5.0).p, 1.0);
    for (const auto& s : traj.samples()) EXPECT_EQ(hamiltonian_value(w, s), 0.5);
}

TEST(Hamiltonian, StraightLineOutsideStripAfterT) {
    const auto w = to_log_form(bump_potential(5.0), 64);
    const double T = w.T;
    const PhaseState s0{w.u_bound + 0.1, 0.3, T + 0.5};
    const auto traj = integrate_hamiltonian(w, s0, range(s0.t, s0.t + 20));
    for (const auto& s : traj.samples()) {
        EXPECT_EQ(s.p, 0.3);
        EXPECT_NEAR(s.u, s0.u + 0.3 * (s.t - s0.t), 1e-12);
    }
    EXPECT_TRUE(traj.events().empty());
}

TEST(Hamiltonian, ForwardThenBackwardReturns) {
    const auto w = to_log_form(bump_potential(4.0), 64);
    const PhaseState s0{-0.3, 0.4, -1.0};
    const auto fwd = integrate_hamiltonian(w, s0, range(-1.0, 2.0));
    const auto mid = fwd.at(2.0);
    const auto back = integrate_hamiltonian(w, mid, range(2.0, -1.0));
    const auto s = back.at(-1.0);
    EXPECT_NEAR(s.u, s0.u, 1e-8);
    EXPECT_NEAR(s.p, s0.p, 1e-8);
}

TEST(Hamiltonian, EventsBracketSupportCrossings) {
    const auto w = to_log_form(bump_potential(1.0), 64);
    const auto traj = integrate_hamiltonian(w, {0.0, 0.0, -2.0}, range(-2.0, 3.0));
    ASSERT_EQ(traj.events().size(), 2u);
    EXPECT_EQ(traj.events()[0].kind, SupportEvent::Kind::Entry);
    EXPECT_NEAR(traj.events()[0].t, 0.0, 1e-10);  // ln r_inner = ln 1
    EXPECT_EQ(traj.events()[1].kind, SupportEvent::Kind::Exit);
    EXPECT_NEAR(traj.events()[1].t, std::log(3.0), 1e-10);
}

TEST(Hamiltonian, ConstantOutsideStripAndRateInside) {
    const auto w = to_log_form(bump_potential(2.0), 64);
    const auto traj = integrate_hamiltonian(w, {-0.2, 0.15, -1.0}, range(-1.0, 2.5));
    const double h = 1e-3;
    for (double t = -0.9; t < 2.4; t += 0.05) {
        const double dH = oracle::five_point_diff([&](double s) { return hamiltonian_value(w, traj.at(s)); }, t, h);
        const double expected = hamiltonian_time_derivative(w, traj.at(t));
        EXPECT_NEAR(dH, expected, 1e-6 * std::max(1.0, std::abs(expected))) << t;
        if (!w.in_support(traj.at(t).u, t)) {
            EXPECT_EQ(expected, 0.0);
        }
    }
}

TEST(AsymptoticMatch, ExactFreeSolution) {
    const auto traj = integrate_radial_ivp(make_zero_potential(), 3, 1.0, 5.0, -3.0, range(0, 5));
    const auto fit = asymptotic_match_outer(traj, 3);
    EXPECT_NEAR(fit.alpha, 3.0, 1e-9);
    EXPECT_NEAR(fit.A, 2.0, 1e-9);
}

TEST(AsymptoticMatch, RoundTripInFourDimensions) {
    const double alpha = -0.7, A = 0.25, r0 = 2.0;
    const auto traj = integrate_radial_ivp(make_zero_potential(), 4, r0, alpha / (r0 * r0) + A,
                                           -2 * alpha / (r0 * r0 * r0), range(0, 4));
    const auto fit = asymptotic_match_outer(traj, 4);
    EXPECT_NEAR(fit.alpha, alpha, 1e-9);
    EXPECT_NEAR(fit.A, A, 1e-9);
}

TEST(AsymptoticMatch, BumpTrajectoryResidual) {
    const auto v = bump_potential(1.5);
    const auto traj = integrate_radial_ivp(v, 3, 0.5, 0.1, 0.0, range(std::log(0.5), 4.0));
    EXPECT_LE(asymptotic_match_outer(traj, 3).max_residual, 1e-6);
}

TEST(AsymptoticMatch, InsufficientRange) {
    const auto v = bump_potential(1.5);
    const auto traj = integrate_radial_ivp(v, 3, 0.5, 0.1, 0.0, range(std::log(0.5), 0.5));
    EXPECT_THROW(asymptotic_match_outer(traj, 3), InsufficientRange);
    EXPECT_THROW(asymptotic_match_outer(traj, 2), InvalidParameter);
}

TEST(Liouville, FreeFlowIsExactlyUnimodular) {
    const auto w = to_log_form(make_zero_potential(), 4);
    EXPECT_EQ(flow_volume_check(w, {0.3, -1.0, -10.0}, range(-10, 10)), 1.0);
}

TEST(Liouville, BumpAndRescaledFlows) {
    const auto w = to_log_form(bump_potential(6.0), 128);
    for (double u0 : {-0.5, 0.0, 0.4})
        for (double p0 : {-0.6, 0.0, 0.7}) {
            EXPECT_NEAR(flow_volume_check(w, {u0, p0, -1.0}, range(-1, 10)), 1.0, 1e-6);
            EXPECT_NEAR(flow_volume_check(w, {u0, p0, 10.0}, range(10, -10)), 1.0, 1e-6);
        }
    const auto w4 = rescaled(w, 4.0, 64);
    EXPECT_NEAR(flow_volume_check(w4, {0.05, 0.02, -1.0}, range(-1, 10)), 1.0, 1e-6);
}
