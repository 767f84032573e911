#pragma once

// Radial Euler-Lagrange flow in log time t = ln r:
//   u' = p,  p' = -(n - 2) p - e^{2t} W_u(u, t),
// which for n = 2 is the Hamiltonian system with H = p^2/2 + e^{2t} W.

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "semilin/errors.hpp"
#include "semilin/ode.hpp"
#include "semilin/potential.hpp"

namespace semilin {

struct PhaseState {
    double u = 0.0;
    double p = 0.0;
    double t = 0.0;
};

struct SupportEvent {
    enum class Kind { Entry, Exit };
    double t = 0.0;
    Kind kind = Kind::Entry;
};

inline const char* to_string(SupportEvent::Kind k) {
    return k == SupportEvent::Kind::Entry ? "entry" : "exit";
}

/// Right-hand side of the log-time flow. The force is not evaluated outside
/// the support, so free motion is reproduced exactly.
inline auto flow_rhs(const LogPotential& w, int n) {
    return [&w, n](double t, const Vec<2>& y) -> Vec<2> {
        double dp = n == 2 ? 0.0 : -(n - 2) * y[1];
        if (w.in_support(y[0], t)) dp -= std::exp(2.0 * t) * w.du(y[0], t);
        return {y[1], dp};
    };
}

class Trajectory {
public:
    Trajectory() = default;
    Trajectory(int n, DenseSolution<2> sol, std::shared_ptr<const LogPotential> w,
               std::vector<SupportEvent> ev)
        : n_(n), sol_(std::move(sol)), events_(std::move(ev)), potential_(std::move(w)) {}

    int dimension() const noexcept { return n_; }
    double t_min() const noexcept { return sol_.t_min(); }
    double t_max() const noexcept { return sol_.t_max(); }
    bool covers(double t) const noexcept { return sol_.covers(t); }
    double support_t_upper() const noexcept { return potential_->T; }
    double support_t_lower() const noexcept { return potential_->t_lower; }
    double u_bound() const noexcept { return potential_->u_bound; }
    const LogPotential& potential() const noexcept { return *potential_; }
    std::shared_ptr<const LogPotential> potential_ptr() const noexcept { return potential_; }

    PhaseState at(double t) const {
        const auto y = sol_(t);
        return {y[0], y[1], t};
    }
    /// u as a function of r.
    double u_at_radius(double r) const { return at(std::log(r)).u; }

    std::vector<PhaseState> samples() const {
        std::vector<PhaseState> s;
        for (double t : sol_.knots()) s.push_back(at(t));
        return s;
    }
    const DenseSolution<2>& dense() const noexcept { return sol_; }
    const std::vector<SupportEvent>& events() const noexcept { return events_; }

private:
    int n_ = 2;
    DenseSolution<2> sol_;
    std::vector<SupportEvent> events_;
    std::shared_ptr<const LogPotential> potential_;
};

namespace detail {

/// Entry/exit of the support box located by bisection on the dense output.
inline std::vector<SupportEvent> support_events(const DenseSolution<2>& sol, const LogPotential& w,
                                                double event_tol) {
    std::vector<SupportEvent> ev;
    if (sol.empty()) return ev;
    auto inside = [&](double t) { return w.in_support(sol(t)[0], t); };
    const auto knots = sol.knots();
    double prev_t = knots.front();
    bool prev_in = inside(prev_t);
    for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
        for (int j = 1; j <= 4; ++j) {
            const double t = knots[i] + (knots[i + 1] - knots[i]) * j / 4.0;
            const bool in = inside(t);
            if (in != prev_in) {
                double a = prev_t;
                double b = t;
                while (b - a > event_tol) {
                    const double m = 0.5 * (a + b);
                    if (inside(m) == prev_in)
                        a = m;
                    else
                        b = m;
                    if (m == a && m == b) break;
                }
                ev.push_back({0.5 * (a + b), in ? SupportEvent::Kind::Entry : SupportEvent::Kind::Exit});
            }
            prev_t = t;
            prev_in = in;
        }
    }
    return ev;
}

inline Trajectory integrate_flow(const LogPotential& w, int n, const PhaseState& s0,
                                 const IntegratorConfig& cfg) {
    cfg.validate();
    if (!std::isfinite(s0.u) || !std::isfinite(s0.p) || !std::isfinite(s0.t))
        throw InvalidParameter("initial state must be finite");
    const double lo = std::min(cfg.t_range.first, cfg.t_range.second);
    const double hi = std::max(cfg.t_range.first, cfg.t_range.second);
    auto pot = std::make_shared<const LogPotential>(w);
    auto sol = integrate_dense<2>(flow_rhs(*pot, n), s0.t, Vec<2>{s0.u, s0.p}, lo, hi, cfg);
    auto ev = support_events(sol, *pot, cfg.event_tol);
    return Trajectory(n, std::move(sol), std::move(pot), std::move(ev));
}

}  // namespace detail

/// u'' + (n-1)/r u' + V_u(u, r) = 0 from (r0, u0, u'(r0) = du0). The range
/// cfg.t_range is in log radius and is extended to include ln r0.
inline Trajectory integrate_radial_ivp(const RadialPotential& v, int n, double r0, double u0,
                                       double du0, const IntegratorConfig& cfg) {
    if (!(r0 > 0.0)) throw InvalidParameter("r0 must be positive");
    if (n < 2) throw InvalidParameter("dimension must be >= 2");
    const LogPotential w = to_log_form(v, 2);
    return detail::integrate_flow(w, n, {u0, r0 * du0, std::log(r0)}, cfg);
}

/// Same, reusing an existing log form.
inline Trajectory integrate_radial_ivp(const LogPotential& w, int n, double r0, double u0,
                                       double du0, const IntegratorConfig& cfg) {
    if (!(r0 > 0.0)) throw InvalidParameter("r0 must be positive");
    if (n < 2) throw InvalidParameter("dimension must be >= 2");
    return detail::integrate_flow(w, n, {u0, r0 * du0, std::log(r0)}, cfg);
}

inline Trajectory integrate_hamiltonian(const LogPotential& w, const PhaseState& s0,
                                        const IntegratorConfig& cfg) {
    return detail::integrate_flow(w, 2, s0, cfg);
}

inline double hamiltonian_value(const LogPotential& w, const PhaseState& s) {
    return 0.5 * s.p * s.p + std::exp(2.0 * s.t) * w.W(s.u, s.t);
}

/// Explicit t-derivative of e^{2t} W, i.e. dH/dt along the flow.
inline double hamiltonian_time_derivative(const LogPotential& w, const PhaseState& s) {
    return std::exp(2.0 * s.t) * (2.0 * w.W(s.u, s.t) + w.Wt(s.u, s.t));
}

struct AsymptoticFit {
    double alpha = 0.0;
    double A = 0.0;
    double max_residual = 0.0;
};

/// Least-squares fit of u = alpha r^{2-n} + A on the part of the trajectory
/// beyond the outer support radius.
inline AsymptoticFit asymptotic_match_outer(const Trajectory& traj, int n, int samples = 64) {
    if (n < 3) throw InvalidParameter("asymptotic matching requires n >= 3");
    const double t0 = std::max(traj.support_t_upper(), traj.t_min());
    const double t1 = traj.t_max();
    if (!(t1 - t0 > 1e-6)) throw InsufficientRange("trajectory does not extend beyond the support");
    double sxx = 0, sx = 0, s1 = 0, sxy = 0, sy = 0;
    std::vector<std::pair<double, double>> pts;
    for (int i = 0; i < samples; ++i) {
        const double t = t0 + (t1 - t0) * (i + 1) / samples;
        const double x = std::exp(-(n - 2) * t);
        const double y = traj.at(t).u;
        pts.emplace_back(x, y);
        sxx += x * x;
        sx += x;
        s1 += 1;
        sxy += x * y;
        sy += y;
    }
    const double det = sxx * s1 - sx * sx;
    if (!(std::abs(det) > 0.0)) throw InsufficientRange("degenerate asymptotic fit");
    AsymptoticFit fit;
    fit.alpha = (sxy * s1 - sx * sy) / det;
    fit.A = (sxx * sy - sx * sxy) / det;
    for (auto [x, y] : pts) fit.max_residual = std::max(fit.max_residual, std::abs(fit.alpha * x + fit.A - y));
    return fit;
}

/// Determinant of the time-(t_end - s0.t) flow map from the tangent system
/// M' = [[0, 1], [-e^{2t} W_uu, -(n-2)]] M, integrated to cfg.t_range.second.
inline double flow_volume_check(const LogPotential& w, const PhaseState& s0,
                                const IntegratorConfig& cfg, int n = 2) {
    cfg.validate();
    auto rhs = [&w, n](double t, const Vec<6>& y) -> Vec<6> {
        const bool in = w.in_support(y[0], t);
        const double e2t = std::exp(2.0 * t);
        const double force = in ? -e2t * w.du(y[0], t) : 0.0;
        const double c = in ? e2t * w.duu(y[0], t) : 0.0;
        const double damp = -(n - 2);
        // y = (u, p, m11, m12, m21, m22)
        return {y[1], damp * y[1] + force, y[4], y[5], -c * y[2] + damp * y[4],
                -c * y[3] + damp * y[5]};
    };
    const Vec<6> y0{s0.u, s0.p, 1.0, 0.0, 0.0, 1.0};
    auto run = dopri5<6>(rhs, s0.t, y0, cfg.t_range.second, cfg);
    const auto& y = run.y_end;
    return y[2] * y[5] - y[3] * y[4];
}

}  // namespace semilin
