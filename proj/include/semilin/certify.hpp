#pragma once

// Minimality certificates for n >= 3: the pointwise Hardy-type condition (A)
// and the L^{n/2} condition (B), the Hardy identity behind (A), the radial
// second variation, and the energy-gap lower bound.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "semilin/errors.hpp"
#include "semilin/odeflow.hpp"
#include "semilin/potential.hpp"
#include "semilin/quadrature.hpp"

namespace semilin {

/// A radial test function xi(r) on [a, b] with its derivative.
struct TestFunction {
    std::function<double(double)> value;
    std::function<double(double)> derivative;
    double a = 0.0;
    double b = 1.0;
};

/// |S^n| = 2 pi^{(n+1)/2} / Gamma((n+1)/2), the volume of the unit n-sphere.
inline double sphere_volume(int n) {
    if (n < 1) throw InvalidParameter("sphere_volume needs n >= 1");
    const double k = 0.5 * (n + 1);
    return 2.0 * std::pow(std::numbers::pi, k) / std::tgamma(k);
}

/// S_n = n (n - 2) / 4 * |S^n|.
inline double sobolev_threshold(int n) { return n * (n - 2) / 4.0 * sphere_volume(n); }

struct HardySides {
    double lhs = 0.0;
    double rhs = 0.0;
};

inline QuadratureOptions tight_quadrature() {
    QuadratureOptions o;
    o.abs_tol = 1e-13;
    o.min_depth = 6;
    return o;
}

/// LHS = int r^{n-1} (xi'^2 - ((n-2)/2)^2 xi^2 / r^2) dr,
/// RHS = (n-2)/2 phi(r1)^2 + int r phi'^2 dr with phi = xi r^{n/2 - 1}.
inline HardySides hardy_identity_check(const TestFunction& xi, int n, double r1, double r2) {
    if (n < 3) throw InvalidParameter("Hardy identity needs n >= 3");
    if (!(r1 >= 0.0) || !(r2 > r1) || !std::isfinite(r2))
        throw InvalidParameter("need 0 <= r1 < r2 < inf");
    double scale = 0.0;
    for (int i = 0; i <= 16; ++i) scale = std::max(scale, std::abs(xi.value(r1 + (r2 - r1) * i / 16.0)));
    if (std::abs(xi.value(r2)) > 1e-10 * std::max(1.0, scale))
        throw PreconditionError("test function must vanish at r2");
    const double c = 0.5 * (n - 2);
    auto lhs_f = [&](double r) {
        const double x = xi.value(r);
        const double dx = xi.derivative(r);
        return std::pow(r, n - 1) * dx * dx - c * c * x * x * std::pow(r, n - 3);
    };
    // r phi'^2 = r^{n-3} (r xi' + (n/2 - 1) xi)^2, finite at r = 0.
    auto rhs_f = [&](double r) {
        const double g = r * xi.derivative(r) + c * xi.value(r);
        return std::pow(r, n - 3) * g * g;
    };
    const auto opt = tight_quadrature();
    HardySides out;
    out.lhs = adaptive_simpson(lhs_f, r1, r2, opt).value;
    const double phi1 = xi.value(r1) * std::pow(r1, 0.5 * n - 1.0);
    out.rhs = c * phi1 * phi1 + adaptive_simpson(rhs_f, r1, r2, opt).value;
    return out;
}

struct Certificate {
    enum class Condition { A, B };
    Condition condition = Condition::A;
    int n = 3;
    double x0_offset = 0.0;
    double margin = 0.0;
    // grid statistics (condition A) or norm details (condition B)
    int grid_points = 0;
    double r_lo = 0.0;
    double r_hi = 0.0;
    double worst_r = 0.0;
    double norm = 0.0;
    double threshold = 0.0;

    bool certified() const noexcept { return std::isfinite(margin) && margin >= 0.0; }
};

inline const char* to_string(Certificate::Condition c) {
    return c == Certificate::Condition::A ? "A" : "B";
}

inline constexpr int kConditionAGrid = 2048;

/// U(r) <= ((n-2)/2)^2 / (r + |offset|)^2 on a dense grid over the support,
/// with golden-section refinement of the worst cell.
inline Certificate check_condition_A(const RadialFunction& U, int n, double x0_offset,
                                     int grid_points = kConditionAGrid) {
    if (n < 3) throw InvalidParameter("condition A needs n >= 3");
    Certificate c;
    c.condition = Certificate::Condition::A;
    c.n = n;
    c.x0_offset = x0_offset;
    c.grid_points = grid_points;
    c.r_hi = U.r_hi;
    c.r_lo = U.r_lo > 0.0 ? U.r_lo : U.r_hi * 1e-6;
    const double k = 0.25 * (n - 2) * (n - 2);
    const double off = std::abs(x0_offset);
    auto margin = [&](double r) { return k / ((r + off) * (r + off)) - U(r); };
    auto neg = [&](double r) { return -margin(r); };
    auto worst = grid_maximize(neg, c.r_lo, c.r_hi, grid_points);
    c.margin = -worst.value;
    c.worst_r = worst.x;
    return c;
}

inline Certificate check_condition_A(const RadialPotential& v, int n, double x0_offset = 0.0,
                                     int grid_points = kConditionAGrid,
                                     int u_density = kDefaultGridDensity) {
    return check_condition_A(u_bound_function(v, n, u_density), n, x0_offset, grid_points);
}

/// ||U||_{n/2} = (|S^{n-1}| int U^{n/2} r^{n-1} dr)^{2/n} against S_n.
inline Certificate check_condition_B(const RadialFunction& U, int n) {
    if (n < 3) throw InvalidParameter("condition B needs n >= 3");
    Certificate c;
    c.condition = Certificate::Condition::B;
    c.n = n;
    c.r_lo = U.r_lo;
    c.r_hi = U.r_hi;
    QuadratureOptions opt;
    opt.abs_tol = 1e-10;
    const double integral = adaptive_simpson(
        [&](double r) { return std::pow(U(r), 0.5 * n) * std::pow(r, n - 1); }, U.r_lo, U.r_hi, opt)
                                .value;
    c.norm = std::pow(sphere_volume(n - 1) * std::max(0.0, integral), 2.0 / n);
    c.threshold = sobolev_threshold(n);
    c.margin = c.threshold - c.norm;
    return c;
}

inline Certificate check_condition_B(const RadialPotential& v, int n,
                                     int u_density = kDefaultGridDensity) {
    return check_condition_B(u_bound_function(v, n, u_density), n);
}

/// Q(xi) = int r^{n-1} (xi'^2 - V_uu(u(r), r) xi^2) dr along a radial solution.
inline double second_variation(const Trajectory& traj, const TestFunction& xi,
                               const RadialPotential& v, int n) {
    const double r_min = std::exp(traj.t_min());
    const double r_max = std::exp(traj.t_max());
    if (xi.a < r_min * (1 - 1e-12) || xi.b > r_max * (1 + 1e-12) || !(xi.b > xi.a))
        throw PreconditionError("test function support must lie inside the trajectory range");
    double scale = 0.0;
    for (int i = 0; i <= 16; ++i)
        scale = std::max(scale, std::abs(xi.value(xi.a + (xi.b - xi.a) * i / 16.0)));
    const double tol = 1e-9 * std::max(1.0, scale);
    if (std::abs(xi.value(xi.a)) > tol || std::abs(xi.value(xi.b)) > tol)
        throw PreconditionError("test function must vanish at both ends of its support");
    const double t_lo = traj.t_min();
    const double t_hi = traj.t_max();
    auto f = [&](double r) {
        const double t = std::clamp(std::log(r), t_lo, t_hi);
        const double u = traj.at(t).u;
        const double x = xi.value(r);
        const double dx = xi.derivative(r);
        return std::pow(r, n - 1) * (dx * dx - v.Vuu(u, r) * x * x);
    };
    std::vector<double> breaks{v.r_outer};
    if (v.r_inner) breaks.push_back(*v.r_inner);
    QuadratureOptions opt;
    opt.abs_tol = 1e-10;
    opt.min_depth = 6;
    return adaptive_simpson(f, xi.a, xi.b, opt, breaks).value;
}

/// 1/2 |S^{n-1}| int r^{n-1} (xi'^2 - U xi^2) dr.
inline double energy_gap_lower_bound(const TestFunction& xi, const std::function<double(double)>& U,
                                     int n) {
    if (n < 2) throw InvalidParameter("dimension must be >= 2");
    auto f = [&](double r) {
        const double x = xi.value(r);
        const double dx = xi.derivative(r);
        return std::pow(r, n - 1) * dx * dx - U(r) * x * x * std::pow(r, n - 1);
    };
    // Written for U ~ 1/r^2 so the second term stays finite as r -> 0.
    auto f_safe = [&](double r) { return r == 0.0 ? f(1e-150) : f(r); };
    return 0.5 * sphere_volume(n - 1) * adaptive_simpson(f_safe, xi.a, xi.b, tight_quadrature()).value;
}

/// xi(r) = (b - r) (c0 + sum_k c_k cos(k pi (r - a)/(b - a))): vanishes at b only.
template <class Rng>
TestFunction random_hardy_test_function(Rng& rng, double a, double b, int modes = 4) {
    std::uniform_real_distribution<double> coef(-1.0, 1.0);
    std::vector<double> c(modes + 1);
    for (auto& x : c) x = coef(rng);
    const double L = b - a;
    TestFunction f;
    f.a = a;
    f.b = b;
    f.value = [c, a, b, L](double r) {
        double s = 0.0;
        for (std::size_t k = 0; k < c.size(); ++k) s += c[k] * std::cos(k * std::numbers::pi * (r - a) / L);
        return (b - r) * s;
    };
    f.derivative = [c, a, b, L](double r) {
        double s = 0.0;
        double ds = 0.0;
        for (std::size_t k = 0; k < c.size(); ++k) {
            const double w = k * std::numbers::pi / L;
            s += c[k] * std::cos(w * (r - a));
            ds -= c[k] * w * std::sin(w * (r - a));
        }
        return -s + (b - r) * ds;
    };
    return f;
}

/// xi(r) = sum_k c_k sin(k pi (r - a)/(b - a)): vanishes at both ends.
template <class Rng>
TestFunction random_dirichlet_test_function(Rng& rng, double a, double b, int modes = 4) {
    std::uniform_real_distribution<double> coef(-1.0, 1.0);
    std::vector<double> c(modes);
    for (auto& x : c) x = coef(rng);
    const double L = b - a;
    TestFunction f;
    f.a = a;
    f.b = b;
    f.value = [c, a, L](double r) {
        double s = 0.0;
        for (std::size_t k = 0; k < c.size(); ++k) s += c[k] * std::sin((k + 1) * std::numbers::pi * (r - a) / L);
        return s;
    };
    f.derivative = [c, a, L](double r) {
        double s = 0.0;
        for (std::size_t k = 0; k < c.size(); ++k) {
            const double w = (k + 1) * std::numbers::pi / L;
            s += c[k] * w * std::cos(w * (r - a));
        }
        return s;
    };
    return f;
}

}  // namespace semilin
