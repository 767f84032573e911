#pragma once

// n = 2 rigidity experiment: conjugate-point scans of the log-time
// Hamiltonian flow, the Gibbs weight e^{-H}, and the two W-dependent sides
// of the discriminant inequality under the rescaling
// H_N = p^2/2 + e^{2t} W(N u, t) / N^2.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "semilin/errors.hpp"
#include "semilin/jacobi.hpp"
#include "semilin/odeflow.hpp"
#include "semilin/parallel.hpp"
#include "semilin/potential.hpp"
#include "semilin/quadrature.hpp"

namespace semilin {

struct ConjugateFinding {
    double u0 = 0.0;
    double p0 = 0.0;
    double t_start = 0.0;
    double t1 = 0.0;
    double t2 = 0.0;
};

struct ScanFailure {
    double u0 = 0.0;
    double p0 = 0.0;
    std::string message;
};

struct ScanOptions {
    /// Launch times of the Jacobi field: t_start plus slide_points - 1 more
    /// evenly spaced up to min(T, t_end).
    int slide_points = 8;
    unsigned jobs = 1;
};

struct ScanResult {
    std::vector<ConjugateFinding> findings;
    std::vector<ScanFailure> failures;
    std::size_t cells = 0;
};

/// For every (u0, p0) integrates the flow from t_start and Jacobi fields
/// with xi = 0, xi' = 1 at each slide time; records the first zero found.
inline ScanResult conjugate_point_scan(const LogPotential& w, const std::vector<double>& u0_grid,
                                       const std::vector<double>& p0_grid, double t_start,
                                       double t_end, const IntegratorConfig& cfg,
                                       const ScanOptions& opt = {}) {
    if (!(t_start < t_end)) throw InvalidParameter("t_start must precede t_end");
    if (u0_grid.empty() || p0_grid.empty()) throw InvalidParameter("scan grids must be nonempty");
    const std::size_t cells = u0_grid.size() * p0_grid.size();
    std::vector<std::optional<ConjugateFinding>> found(cells);
    std::vector<std::optional<ScanFailure>> failed(cells);
    const auto flow_cfg = cfg.with_range(t_start, t_end);
    const double slide_hi = std::min(w.T, t_end);
    const int slides = std::max(1, opt.slide_points);

    parallel_for(cells, opt.jobs, [&](std::size_t c) {
        const double u0 = u0_grid[c / p0_grid.size()];
        const double p0 = p0_grid[c % p0_grid.size()];
        try {
            const auto traj = integrate_hamiltonian(w, {u0, p0, t_start}, flow_cfg);
            const bool touches = w.in_support(u0, t_start) ||
                                 std::any_of(traj.events().begin(), traj.events().end(), [](auto& e) {
                                     return e.kind == SupportEvent::Kind::Entry;
                                 });
            // A free trajectory has affine Jacobi fields: at most one zero.
            if (!touches) return;
            for (int k = 0; k < slides; ++k) {
                const double s = slides == 1 ? t_start
                                             : t_start + (slide_hi - t_start) * k / (slides - 1);
                if (!(s < t_end)) break;
                const auto field =
                    integrate_jacobi(traj, 0.0, 1.0, JacobiMode::LogForm, cfg.with_range(s, t_end));
                const auto zs = find_vanishing(field, VanishingKind::Conjugate, s);
                if (!zs.empty()) {
                    found[c] = ConjugateFinding{u0, p0, t_start, s, zs.front()};
                    return;
                }
            }
        } catch (const Error& e) {
            failed[c] = ScanFailure{u0, p0, e.what()};
        }
    });

    ScanResult out;
    out.cells = cells;
    for (std::size_t c = 0; c < cells; ++c) {
        if (found[c]) out.findings.push_back(*found[c]);
        if (failed[c]) out.failures.push_back(*failed[c]);
    }
    return out;
}

/// |xi(t2)| for the field re-integrated with xi(t1) = 0, xi'(t1) = 1 along
/// a freshly integrated trajectory.
inline double verify_finding(const LogPotential& w, const ConjugateFinding& f,
                             const IntegratorConfig& cfg) {
    const double hi = f.t2 + 0.1;
    const auto traj = integrate_hamiltonian(w, {f.u0, f.p0, f.t_start}, cfg.with_range(f.t_start, hi));
    const auto field = integrate_jacobi(traj, 0.0, 1.0, JacobiMode::LogForm, cfg.with_range(f.t1, hi));
    return std::abs(field.xi(f.t2));
}

/// alpha = e^{-H} = exp(-p^2/2 - e^{2t} W(u, t)).
inline double gibbs_density(const LogPotential& w, const PhaseState& s) {
    return std::exp(-hamiltonian_value(w, s));
}

struct InequalitySides {
    double lhs = 0.0;
    double rhs = 0.0;
};

namespace detail {

inline double quadrature_t_lower(const LogPotential& w) { return w.sweep_t_lower() - 2.0; }

/// Integral of f over the strip to relative accuracy quad_tol. The scale
/// comes from a coarse fixed-grid Simpson pass; an integrand vanishing on
/// that grid and on the adaptive pass integrates to exactly zero.
template <class F>
double strip_integral(const LogPotential& w, F&& f, double quad_tol) {
    std::vector<double> t_breaks{w.T};
    if (std::isfinite(w.t_lower)) t_breaks.push_back(w.t_lower);
    const double t0 = quadrature_t_lower(w);
    const double t1 = w.T;
    const double u0 = -w.u_bound;
    const double u1 = w.u_bound;
    constexpr int m = 64;
    double scale = 0.0;
    for (int i = 0; i <= m; ++i)
        for (int j = 0; j <= m; ++j)
            scale = std::max(scale, std::abs(f(t0 + (t1 - t0) * i / m, u0 + (u1 - u0) * j / m)));
    scale *= (t1 - t0) * (u1 - u0);
    QuadratureOptions opt;
    opt.abs_tol = quad_tol * std::max(scale, std::numeric_limits<double>::min());
    opt.min_depth = 6;
    opt.max_depth = 40;
    auto r = adaptive_simpson_2d(f, t0, t1, u0, u1, opt, t_breaks, {});
    if (!r.converged)
        throw AccuracyError("strip quadrature did not converge", r.value, r.error_estimate);
    return r.value;
}

}  // namespace detail

/// LHS_N = 4/N^3 int e^{-e^{2t} W / N^2} (e^{2t} W_u)^2 dv dt,
/// RHS_N = 1/N^5 int e^{-e^{2t} W / N^2} ((e^{2t} W)_t)^2 dv dt.
/// The common sqrt(2 pi) from the p-integral is left out of both. quad_tol
/// is relative to the size of the integrand over the strip.
inline InequalitySides rescaled_inequality_sides(const LogPotential& w, double N,
                                                 double quad_tol = 1e-10) {
    if (!(N >= 1.0)) throw InvalidParameter("N must be >= 1");
    const double inv_n2 = 1.0 / (N * N);
    // Closed box: the integrand takes its one-sided limit on the strip edge.
    auto closed = [&](double v, double t) {
        return std::abs(v) <= w.u_bound && t <= w.T && t >= w.t_lower;
    };
    auto lhs_f = [&](double t, double v) {
        if (!closed(v, t)) return 0.0;
        const double e2t = std::exp(2.0 * t);
        const double g = e2t * w.du(v, t);
        return std::exp(-e2t * w.value(v, t) * inv_n2) * g * g;
    };
    auto rhs_f = [&](double t, double v) {
        if (!closed(v, t)) return 0.0;
        const double e2t = std::exp(2.0 * t);
        const double W = w.value(v, t);
        const double g = e2t * (2.0 * W + w.dt(v, t));
        return std::exp(-e2t * W * inv_n2) * g * g;
    };
    InequalitySides s;
    s.lhs = 4.0 / (N * N * N) * detail::strip_integral(w, lhs_f, quad_tol);
    s.rhs = 1.0 / (N * N * N * N * N) * detail::strip_integral(w, rhs_f, quad_tol);
    return s;
}

struct DiscriminantCheck {
    double lhs = 0.0;
    double rhs = 0.0;
    bool holds = true;
};

/// 4 int alpha (e^{2t} W_u)^2 dmu dt <= int alpha ((e^{2t} W)_t)^2 dmu dt,
/// with the Gaussian p-integral done analytically (sqrt(2 pi) kept).
inline DiscriminantCheck discriminant_inequality_check(const LogPotential& w,
                                                       double quad_tol = 1e-10) {
    const auto s = rescaled_inequality_sides(w, 1.0, quad_tol);
    const double gauss = std::sqrt(2.0 * std::numbers::pi);
    return {gauss * s.lhs, gauss * s.rhs, s.lhs <= s.rhs};
}

struct ScalingFit {
    std::vector<double> Ns;
    std::vector<InequalitySides> sides;
    double slope_lhs = 0.0;
    double slope_rhs = 0.0;
    std::optional<int> crossover_N;
    bool identically_zero = false;
};

inline double least_squares_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

/// Log-log slopes of both sides against N and the smallest listed N at which
/// the 4-side exceeds the t-derivative side.
inline ScalingFit scaling_exponent_fit(const LogPotential& w, const std::vector<int>& N_list,
                                       double quad_tol = 1e-10, unsigned jobs = 1) {
    if (N_list.size() < 3) throw InvalidParameter("need at least three N values");
    for (std::size_t i = 0; i < N_list.size(); ++i) {
        if (N_list[i] < 1) throw InvalidParameter("N must be >= 1");
        if (i > 0 && N_list[i] <= N_list[i - 1])
            throw InvalidParameter("N values must be strictly increasing");
    }
    ScalingFit fit;
    fit.sides.resize(N_list.size());
    for (int N : N_list) fit.Ns.push_back(N);
    parallel_for(N_list.size(), jobs, [&](std::size_t i) {
        fit.sides[i] = rescaled_inequality_sides(w, N_list[i], quad_tol);
    });
    const bool all_zero = std::all_of(fit.sides.begin(), fit.sides.end(),
                                      [](const auto& s) { return s.lhs == 0.0 && s.rhs == 0.0; });
    if (all_zero) {
        fit.identically_zero = true;
        return fit;
    }
    std::vector<double> lx, ll, lr;
    for (std::size_t i = 0; i < N_list.size(); ++i) {
        if (!(fit.sides[i].lhs > 0.0) || !(fit.sides[i].rhs > 0.0))
            throw DegenerateFit("an inequality side vanished for a nonzero potential");
        lx.push_back(std::log(fit.Ns[i]));
        ll.push_back(std::log(fit.sides[i].lhs));
        lr.push_back(std::log(fit.sides[i].rhs));
    }
    fit.slope_lhs = least_squares_slope(lx, ll);
    fit.slope_rhs = least_squares_slope(lx, lr);
    for (std::size_t i = 0; i < N_list.size(); ++i)
        if (fit.sides[i].lhs > fit.sides[i].rhs) {
            fit.crossover_N = N_list[i];
            break;
        }
    return fit;
}

/// First N >= 1 where LHS_N > RHS_N, by doubling then bisection on the
/// bracketing pair (the ratio LHS_N / RHS_N grows like N^2).
inline std::optional<int> find_crossover(const LogPotential& w, double quad_tol = 1e-10,
                                         int N_max = 1 << 20) {
    auto violated = [&](int N) {
        const auto s = rescaled_inequality_sides(w, N, quad_tol);
        return s.lhs > s.rhs;
    };
    if (violated(1)) return 1;
    int lo = 1;
    int hi = 2;
    while (hi <= N_max && !violated(hi)) {
        lo = hi;
        hi *= 2;
    }
    if (hi > N_max) return std::nullopt;
    while (hi - lo > 1) {
        const int mid = lo + (hi - lo) / 2;
        if (violated(mid))
            hi = mid;
        else
            lo = mid;
    }
    return hi;
}

struct RigidityReport {
    std::string potential;
    std::vector<double> u0_grid;
    std::vector<double> p0_grid;
    double t_start = 0.0;
    double t_end = 0.0;
    ScanResult scan;
    std::optional<ScalingFit> scaling;
    std::optional<DiscriminantCheck> discriminant;
};

/// Default scan grid: 41 u0 values over [-2U, 2U] and 41 p0 values over [-3, 3].
inline std::pair<std::vector<double>, std::vector<double>> default_scan_grids(const LogPotential& w,
                                                                              int points = 41) {
    std::vector<double> u(points), p(points);
    for (int i = 0; i < points; ++i) {
        u[i] = -2.0 * w.u_bound + 4.0 * w.u_bound * i / (points - 1);
        p[i] = -3.0 + 6.0 * i / (points - 1);
    }
    return {u, p};
}

}  // namespace semilin
