#pragma once

// Jacobi fields along log-time trajectories, conjugate/focal point search,
// Riccati traces omega = xi'/xi, and the a-priori bounds on omega.
//
// Everything is integrated in log time. The linearised equation reads
//   xi'' = -(n - 2) xi' - e^{2t} W_uu(u(t), t) xi,
// which is xi'' + e^{2t} W_uu xi = 0 for n = 2 and the radial form
// xi_rr + (n-1)/r xi_r + V_uu xi = 0 after the change r = e^t.

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "semilin/errors.hpp"
#include "semilin/ode.hpp"
#include "semilin/odeflow.hpp"
#include "semilin/potential.hpp"
#include "semilin/quadrature.hpp"

namespace semilin {

/// How initial data and derivatives are expressed: d/dt (log form) or d/dr.
enum class JacobiMode { LogForm, RadialForm };

enum class VanishingKind { Conjugate, Focal };

struct JacobiZero {
    double t = 0.0;
    double bracket_lo = 0.0;
    double bracket_hi = 0.0;
};

inline constexpr double kZeroSampleSpacing = 1e-2;
inline constexpr double kDegenerateZeroLevel = 1e-10;
inline constexpr double kRiccatiBlowupCap = 1e8;

/// Co-integrated (u, p, xi, xi_t) over [t_min, t_max].
class JacobiField {
public:
    JacobiField() = default;
    JacobiField(int n, JacobiMode mode, double t_init, DenseSolution<4> sol,
                std::shared_ptr<const LogPotential> w, double event_tol)
        : n_(n),
          mode_(mode),
          t_init_(t_init),
          sol_(std::move(sol)),
          potential_(std::move(w)),
          event_tol_(event_tol) {}

    int dimension() const noexcept { return n_; }
    JacobiMode mode() const noexcept { return mode_; }
    double t_init() const noexcept { return t_init_; }
    double t_min() const noexcept { return sol_.t_min(); }
    double t_max() const noexcept { return sol_.t_max(); }
    double event_tol() const noexcept { return event_tol_; }
    const LogPotential& potential() const noexcept { return *potential_; }
    const DenseSolution<4>& dense() const noexcept { return sol_; }

    PhaseState state(double t) const {
        const auto y = sol_(t);
        return {y[0], y[1], t};
    }
    double xi(double t) const { return sol_(t)[2]; }
    /// d(xi)/dt in log time.
    double xi_dot(double t) const { return sol_(t)[3]; }
    /// Derivative in the field's own mode (d/dt or d/dr).
    double xi_derivative(double t) const {
        return mode_ == JacobiMode::RadialForm ? xi_dot(t) * std::exp(-t) : xi_dot(t);
    }

    const std::vector<JacobiZero>& zeros() const noexcept { return zeros_; }
    const std::vector<double>& degenerate_zeros() const noexcept { return degenerate_; }

    void set_zeros(std::vector<JacobiZero> z, std::vector<double> degenerate) {
        zeros_ = std::move(z);
        degenerate_ = std::move(degenerate);
    }

private:
    int n_ = 2;
    JacobiMode mode_ = JacobiMode::LogForm;
    double t_init_ = 0.0;
    DenseSolution<4> sol_;
    std::shared_ptr<const LogPotential> potential_;
    double event_tol_ = 1e-12;
    std::vector<JacobiZero> zeros_;
    std::vector<double> degenerate_;
};

namespace detail {

inline auto jacobi_rhs(const LogPotential& w, int n) {
    return [&w, n](double t, const Vec<4>& y) -> Vec<4> {
        const double damp = -(n - 2);
        double force = 0.0;
        double c = 0.0;
        if (w.in_support(y[0], t)) {
            const double e2t = std::exp(2.0 * t);
            force = -e2t * w.du(y[0], t);
            c = e2t * w.duu(y[0], t);
        }
        return {y[1], damp * y[1] + force, y[3], damp * y[3] - c * y[2]};
    };
}

/// Sign changes of component `idx` on a grid of spacing <= `spacing`,
/// refined by bisection. Exact zeros on the grid are recorded as-is.
template <std::size_t N>
std::pair<std::vector<JacobiZero>, std::vector<double>> scan_zeros(const DenseSolution<N>& sol,
                                                                    std::size_t idx,
                                                                    double spacing,
                                                                    double event_tol) {
    std::vector<JacobiZero> zeros;
    std::vector<double> degenerate;
    const auto grid = sol.sample_grid(spacing);
    std::vector<double> val(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) val[i] = sol(grid[i])[idx];
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (val[i] == 0.0) {
            if (zeros.empty() || grid[i] - zeros.back().t > event_tol)
                zeros.push_back({grid[i], grid[i], grid[i]});
            continue;
        }
        if (i + 1 < grid.size() && val[i + 1] != 0.0 && (val[i] < 0.0) != (val[i + 1] < 0.0)) {
            double a = grid[i];
            double b = grid[i + 1];
            const bool neg_a = val[i] < 0.0;
            while (b - a > event_tol) {
                const double m = 0.5 * (a + b);
                if (m <= a || m >= b) break;
                const double vm = sol(m)[idx];
                if (vm == 0.0) {
                    a = b = m;
                    break;
                }
                if ((vm < 0.0) == neg_a)
                    a = m;
                else
                    b = m;
            }
            const double z = 0.5 * (a + b);
            if (zeros.empty() || z - zeros.back().t > event_tol)
                zeros.push_back({z, grid[i], grid[i + 1]});
            continue;
        }
        // Tangential approach without a sign change.
        if (i > 0 && i + 1 < grid.size() && std::abs(val[i]) < kDegenerateZeroLevel &&
            std::abs(val[i]) <= std::abs(val[i - 1]) && std::abs(val[i]) <= std::abs(val[i + 1]) &&
            (val[i - 1] < 0.0) == (val[i] < 0.0) && (val[i + 1] < 0.0) == (val[i] < 0.0))
            degenerate.push_back(grid[i]);
    }
    return {zeros, degenerate};
}

}  // namespace detail

/// Jacobi field along `traj` with xi(t0) = xi0 and derivative dxi0 at
/// t0 = cfg.t_range.first, integrated to cfg.t_range.second. In radial form
/// dxi0 is d(xi)/dr.
inline JacobiField integrate_jacobi(const Trajectory& traj, double xi0, double dxi0,
                                    JacobiMode mode, const IntegratorConfig& cfg,
                                    double sample_spacing = kZeroSampleSpacing) {
    cfg.validate();
    if (xi0 == 0.0 && dxi0 == 0.0) throw InvalidParameter("Jacobi initial data must be nonzero");
    const double t0 = cfg.t_range.first;
    const double t1 = cfg.t_range.second;
    if (!traj.covers(t0) || !traj.covers(t1))
        throw PreconditionError("trajectory does not cover the Jacobi range");
    const auto s = traj.at(t0);
    const double eta0 = mode == JacobiMode::RadialForm ? std::exp(t0) * dxi0 : dxi0;
    auto pot = traj.potential_ptr();
    const int n = traj.dimension();
    auto sol = integrate_dense<4>(detail::jacobi_rhs(*pot, n), t0, Vec<4>{s.u, s.p, xi0, eta0},
                                  std::min(t0, t1), std::max(t0, t1), cfg);
    JacobiField field(n, mode, t0, std::move(sol), std::move(pot), cfg.event_tol);
    auto [z, d] = detail::scan_zeros(field.dense(), 2, sample_spacing, cfg.event_tol);
    field.set_zeros(std::move(z), std::move(d));
    return field;
}

/// Zeros of xi strictly after from_t. Conjugate search requires
/// xi(from_t) = 0, xi'(from_t) = 1; focal search xi(from_t) = 1, xi'(from_t) = 0.
inline std::vector<double> find_vanishing(const JacobiField& field, VanishingKind kind,
                                          double from_t) {
    constexpr double tol = 1e-9;
    const double x = field.xi(from_t);
    const double dx = field.xi_derivative(from_t);
    if (kind == VanishingKind::Conjugate) {
        if (std::abs(x) > tol || std::abs(dx - 1.0) > tol)
            throw ContractViolation("conjugate search needs xi = 0, xi' = 1 at the start");
    } else {
        if (std::abs(x - 1.0) > tol || std::abs(dx) > tol)
            throw ContractViolation("focal search needs xi = 1, xi' = 0 at the start");
    }
    std::vector<double> out;
    const double eps = std::max(10.0 * field.event_tol(), 1e-10);
    for (const auto& z : field.zeros())
        if (z.t > from_t + eps) out.push_back(z.t);
    return out;
}

struct RiccatiSample {
    double t = 0.0;
    double omega = 0.0;
    bool blowup = false;
};

/// omega = xi_t / xi along a Jacobi field (log time).
class RiccatiTrace {
public:
    RiccatiTrace() = default;
    RiccatiTrace(JacobiField field, std::vector<RiccatiSample> samples, std::vector<double> blowups)
        : field_(std::move(field)), samples_(std::move(samples)), blowups_(std::move(blowups)) {
        K_ = field_.potential().K;
        T_ = field_.potential().T;
    }

    const JacobiField& field() const noexcept { return field_; }
    const std::vector<RiccatiSample>& samples() const noexcept { return samples_; }
    const std::vector<double>& blowups() const noexcept { return blowups_; }
    double K() const noexcept { return K_; }
    double T() const noexcept { return T_; }
    /// Constant of the e^{t/4} lower rate; the source gives no value for it.
    std::optional<double> K_tilde() const noexcept { return std::nullopt; }

    double omega(double t) const { return field_.xi_dot(t) / field_.xi(t); }

    /// omega' + omega^2 + (n-2) omega + e^{2t} W_uu. With omega' = xi_t'/xi -
    /// omega^2 and xi_t' from the derivative of the dense interpolant this is
    /// (xi_t' + (n-2) xi_t + e^{2t} W_uu xi) / xi.
    double residual(double t) const {
        const auto& sol = field_.dense();
        const auto y = sol(t);
        const double ddx = sol.derivative(t)[3];
        const auto& pot = field_.potential();
        const double c = std::exp(2.0 * t) * pot.Wuu(y[0], t);
        return (ddx + (field_.dimension() - 2) * y[3] + c * y[2]) / y[2];
    }

    /// Max |residual| over samples with |omega| <= omega_limit, i.e. away
    /// from blow-up markers.
    double max_residual(double omega_limit = 1e2) const {
        double worst = 0.0;
        for (const auto& s : samples_) {
            if (s.blowup || !(std::abs(s.omega) <= omega_limit)) continue;
            worst = std::max(worst, std::abs(residual(s.t)));
        }
        return worst;
    }

private:
    JacobiField field_;
    std::vector<RiccatiSample> samples_;
    std::vector<double> blowups_;
    double K_ = 0.0;
    double T_ = 0.0;
};

inline RiccatiTrace riccati_from_jacobi(const JacobiField& field,
                                        double spacing = kZeroSampleSpacing,
                                        double cap = kRiccatiBlowupCap) {
    std::vector<RiccatiSample> samples;
    std::vector<double> blowups;
    for (const auto& z : field.zeros()) blowups.push_back(z.t);
    for (double t : field.dense().sample_grid(spacing)) {
        const double x = field.xi(t);
        RiccatiSample s{t, 0.0, false};
        if (x == 0.0) {
            s.omega = std::numeric_limits<double>::infinity();
            s.blowup = true;
        } else {
            s.omega = field.xi_dot(t) / x;
            s.blowup = !(std::abs(s.omega) <= cap);
        }
        if (s.blowup) {
            bool near = false;
            for (double b : blowups) near = near || std::abs(b - t) <= spacing;
            if (!near) blowups.push_back(t);
        }
        samples.push_back(s);
    }
    std::sort(blowups.begin(), blowups.end());
    return RiccatiTrace(field, std::move(samples), std::move(blowups));
}

/// Blow-up window for omega' <= B^2 - omega^2, omega(t0) = omega0.
/// Empty when |omega0| <= B.
inline std::optional<std::pair<double, double>> riccati_blowup_window(double omega0, double B,
                                                                      double t0) {
    if (!(B > 0.0)) throw InvalidParameter("B must be positive");
    if (std::abs(omega0) <= B) return std::nullopt;
    const double delta = std::log((omega0 - B) / (omega0 + B)) / (2.0 * B);
    if (omega0 > B) return std::pair{t0 + delta, t0};
    return std::pair{t0, t0 + delta};
}

enum class RegionCase { I1, I2, I3, II1, II2, II3, Global };

inline const char* to_string(RegionCase c) {
    switch (c) {
        case RegionCase::I1: return "I1";
        case RegionCase::I2: return "I2";
        case RegionCase::I3: return "I3";
        case RegionCase::II1: return "II1";
        case RegionCase::II2: return "II2";
        case RegionCase::II3: return "II3";
        case RegionCase::Global: return "global";
    }
    return "global";
}

struct OmegaBounds {
    double lower = 0.0;
    double upper = 0.0;
    RegionCase region = RegionCase::Global;
};

/// Case-matched bounds on omega at a phase point, from the straight-line
/// geometry outside the strip |u| <= U, t <= T. Unmatched points get the
/// global bounds |omega| <= K e^T, omega < K e^t (t < T), 0 <= omega < 1/(t-T) (t > T).
inline OmegaBounds omega_region_bound(const PhaseState& s, double K, double T, double U) {
    const double u = s.u;
    const double p = s.p;
    const double t = s.t;
    if (t <= T) {
        if (u > U && p > 0.0) return {0.0, K * std::exp(t - (u - U) / p), RegionCase::I1};
        if (u < -U && p < 0.0) return {0.0, K * std::exp(t + (-U - u) / p), RegionCase::I2};
        if ((u > U - p * (T - t) && p <= 0.0) || (u < -U - p * (T - t) && p >= 0.0))
            return {0.0, 0.0, RegionCase::I3};
        return {-K * std::exp(T), std::min(K * std::exp(T), K * std::exp(t)), RegionCase::Global};
    }
    if (u > U + p * (t - T) && p > 0.0) return {0.0, K * std::exp(t - (u - U) / p), RegionCase::II1};
    if (u < -U + p * (t - T) && p < 0.0)
        return {0.0, K * std::exp(t + (-u - U) / p), RegionCase::II2};
    if ((u < -U && p >= 0.0) || (u > U && p <= 0.0)) return {0.0, 0.0, RegionCase::II3};
    return {0.0, std::min(K * std::exp(T), 1.0 / (t - T)), RegionCase::Global};
}

/// x coth(x), stable near 0.
inline double x_coth_x(double x) {
    if (std::abs(x) < 1e-6) return 1.0 + x * x / 3.0;
    return x / std::tanh(x);
}

/// Lower envelope for omega(tau0), tau0 < tau_hi = min(0, T):
///   omega(tau0) >= -inf over tau1 in (tau0, tau_hi] of B coth(B d),
/// with B = K e^{tau1}, d = tau1 - tau0. Every tau1 gives a valid bound.
inline double certified_lower_envelope(double tau0, double K, double T) {
    const double hi = std::min(0.0, T);
    if (!(tau0 < hi)) return -K * std::exp(T);
    auto neg_bound = [&](double tau1) {
        const double d = tau1 - tau0;
        const double B = K * std::exp(tau1);
        return -x_coth_x(B * d) / d;
    };
    auto best = grid_maximize(neg_bound, tau0 + 1e-9 * std::max(1.0, hi - tau0), hi, 257);
    return best.value;
}

struct BoundCheck {
    std::string name;
    std::size_t samples = 0;
    std::size_t failures = 0;
    double min_margin = std::numeric_limits<double>::infinity();
    bool passed() const noexcept { return failures == 0; }

    void record(double margin, double slack) {
        ++samples;
        min_margin = std::min(min_margin, margin);
        if (margin < -slack) ++failures;
    }
};

struct RiccatiBoundsReport {
    std::vector<BoundCheck> checks;
    /// Empirical sup of max(0, -omega) e^{-t/4} for t < min(0, T); the
    /// e^{t/4} lower rate is reported, not asserted.
    double empirical_rate_constant = 0.0;
    /// Constant used in the bounds: max(K, sqrt(sup(-W_uu)^+)).
    double K = 0.0;

    bool all_passed() const {
        return std::all_of(checks.begin(), checks.end(), [](const BoundCheck& c) { return c.passed(); });
    }
    const BoundCheck& get(const std::string& name) const {
        for (const auto& c : checks)
            if (c.name == name) return c;
        throw InvalidParameter("unknown bound " + name);
    }
};

/// Checks omega samples against the global bounds, the t > T decay bound,
/// the certified lower envelope, and the region-matched bounds.
inline RiccatiBoundsReport riccati_bounds_check(const RiccatiTrace& trace, const LogPotential& w,
                                                double slack = 1e-9) {
    if (!trace.blowups().empty())
        throw Inapplicable("Riccati trace has blow-ups; bounds need a conjugate-point-free solution");
    const double K = riccati_bound_constant(w);
    const double T = w.T;
    const double U = w.u_bound;
    RiccatiBoundsReport rep;
    rep.K = K;
    BoundCheck global{"global"};
    BoundCheck decay{"decay"};
    BoundCheck upper{"upper"};
    BoundCheck envelope{"certified_lower_envelope"};
    BoundCheck region{"regions"};
    const double tau_hi = std::min(0.0, T);
    for (const auto& s : trace.samples()) {
        const double om = s.omega;
        const double t = s.t;
        global.record(K * std::exp(T) - std::abs(om), slack);
        if (t > T) {
            decay.record(std::min(om, 1.0 / (t - T) - om), slack);
        } else if (t < T) {
            upper.record(K * std::exp(t) - om, slack);
        }
        if (t < tau_hi) {
            envelope.record(om - certified_lower_envelope(t, K, T), slack);
            rep.empirical_rate_constant =
                std::max(rep.empirical_rate_constant, std::max(0.0, -om) * std::exp(-t / 4.0));
        }
        const auto st = trace.field().state(t);
        const auto b = omega_region_bound(st, K, T, U);
        region.record(std::min(om - b.lower, b.upper - om), slack);
    }
    rep.checks = {global, decay, upper, envelope, region};
    return rep;
}

}  // namespace semilin
