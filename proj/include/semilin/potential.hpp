#pragma once

// Compactly supported potentials V(u, r), their log-coordinate form
// W(u, t) = V(u, e^t), and the bump-based constructors used throughout.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>

#include "semilin/errors.hpp"
#include "semilin/quadrature.hpp"

namespace semilin {

/// amplitude * exp(1 - 1/(1 - s^2)), s = (x - center) / width, zero for |s| >= 1.
class BumpFunction {
public:
    struct Jet {
        double value = 0.0;
        double d1 = 0.0;
        double d2 = 0.0;
        double d3 = 0.0;
    };

    BumpFunction() = default;
    BumpFunction(double center, double width, double amplitude)
        : center_(center), width_(width), amplitude_(amplitude) {}

    double center() const noexcept { return center_; }
    double width() const noexcept { return width_; }
    double amplitude() const noexcept { return amplitude_; }
    double lower() const noexcept { return center_ - width_; }
    double upper() const noexcept { return center_ + width_; }
    bool is_zero() const noexcept { return amplitude_ == 0.0; }

    Jet jet(double x) const noexcept {
        Jet j;
        if (amplitude_ == 0.0) return j;
        const double s = (x - center_) / width_;
        if (!(std::abs(s) < 1.0)) return j;
        const double q = 1.0 - s * s;
        const double g = 1.0 - 1.0 / q;
        // exp underflows long before the q^-4 factors overflow.
        if (g < -700.0) return j;
        const double phi = std::exp(g);
        const double q2 = q * q;
        const double q3 = q2 * q;
        const double g1 = -2.0 * s / q2;
        const double g2 = -2.0 / q2 - 8.0 * s * s / q3;
        const double g3 = -24.0 * s / q3 - 48.0 * s * s * s / (q3 * q);
        const double iw = 1.0 / width_;
        j.value = amplitude_ * phi;
        j.d1 = amplitude_ * g1 * phi * iw;
        j.d2 = amplitude_ * (g2 + g1 * g1) * phi * iw * iw;
        j.d3 = amplitude_ * (g3 + 3.0 * g1 * g2 + g1 * g1 * g1) * phi * iw * iw * iw;
        return j;
    }

    double operator()(double x) const noexcept { return jet(x).value; }

private:
    double center_ = 0.0;
    double width_ = 1.0;
    double amplitude_ = 0.0;
};

inline BumpFunction make_bump(double center, double width, double amplitude) {
    if (!(width > 0.0) || !std::isfinite(width))
        throw InvalidParameter("bump width must be positive and finite");
    if (!std::isfinite(center) || !std::isfinite(amplitude))
        throw InvalidParameter("bump center and amplitude must be finite");
    return BumpFunction(center, width, amplitude);
}

using Field2 = std::function<double(double, double)>;

/// V(u, r) with its derivatives. All accessors return exactly zero outside
/// the support box {|u| < u_bound, r_inner < r < r_outer}.
struct RadialPotential {
    Field2 value;
    Field2 du;
    Field2 duu;
    Field2 dr;
    double u_bound = 0.0;
    double r_outer = 0.0;
    std::optional<double> r_inner;
    std::string description;

    bool in_support(double u, double r) const noexcept {
        return std::abs(u) < u_bound && r < r_outer && r > r_inner.value_or(0.0);
    }
    double V(double u, double r) const { return in_support(u, r) ? value(u, r) : 0.0; }
    double Vu(double u, double r) const { return in_support(u, r) ? du(u, r) : 0.0; }
    double Vuu(double u, double r) const { return in_support(u, r) ? duu(u, r) : 0.0; }
    double Vr(double u, double r) const { return in_support(u, r) ? dr(u, r) : 0.0; }
};

/// W(u, t) = V(u, e^t) on the semi-strip {|u| <= u_bound, t <= T}.
/// t_lower is the lower edge of the support in t (-inf when unknown).
struct LogPotential {
    Field2 value;
    Field2 du;
    Field2 duu;
    Field2 dt;
    double u_bound = 0.0;
    double T = 0.0;
    double t_lower = -std::numeric_limits<double>::infinity();
    double K = 0.0;
    std::optional<RadialPotential> radial;
    std::string description;

    bool in_support(double u, double t) const noexcept {
        return std::abs(u) < u_bound && t < T && t > t_lower;
    }
    bool in_strip(double u, double t) const noexcept { return std::abs(u) <= u_bound && t <= T; }

    double W(double u, double t) const { return in_support(u, t) ? value(u, t) : 0.0; }
    double Wu(double u, double t) const { return in_support(u, t) ? du(u, t) : 0.0; }
    double Wuu(double u, double t) const { return in_support(u, t) ? duu(u, t) : 0.0; }
    double Wt(double u, double t) const { return in_support(u, t) ? dt(u, t) : 0.0; }

    /// Lower t used for numerical sweeps of the strip.
    double sweep_t_lower() const noexcept { return std::isfinite(t_lower) ? t_lower : T - 40.0; }
};

inline constexpr int kDefaultGridDensity = 512;

namespace detail {

/// sup over the strip of max(sign * W_uu, 0) by grid search plus
/// coordinate golden-section refinement around the grid argmax.
inline double curvature_sup(const LogPotential& w, int grid_density, double sign) {
    if (grid_density < 2) throw InvalidParameter("grid_density must be >= 2");
    const double u0 = -w.u_bound;
    const double u1 = w.u_bound;
    const double t0 = w.sweep_t_lower();
    const double t1 = w.T;
    if (!(u1 > u0) || !(t1 > t0)) return 0.0;
    const double hu = (u1 - u0) / (grid_density - 1);
    const double ht = (t1 - t0) / (grid_density - 1);
    double best = 0.0;
    double bu = 0.0;
    double bt = 0.0;
    bool found = false;
    for (int i = 0; i < grid_density; ++i) {
        const double u = u0 + i * hu;
        for (int j = 0; j < grid_density; ++j) {
            const double t = t0 + j * ht;
            const double v = sign * w.Wuu(u, t);
            if (v > best) {
                best = v;
                bu = u;
                bt = t;
                found = true;
            }
        }
    }
    if (!found) return 0.0;
    double cu = bu;
    double ct = bt;
    for (int round = 0; round < 4; ++round) {
        auto ru = golden_maximize([&](double u) { return sign * w.Wuu(u, ct); }, std::max(u0, cu - hu),
                                  std::min(u1, cu + hu), 1e-13);
        if (ru.value > best) {
            best = ru.value;
            cu = ru.x;
        }
        auto rt = golden_maximize([&](double t) { return sign * w.Wuu(cu, t); }, std::max(t0, ct - ht),
                                  std::min(t1, ct + ht), 1e-13);
        if (rt.value > best) {
            best = rt.value;
            ct = rt.x;
        }
    }
    return best;
}

}  // namespace detail

/// K = sqrt(sup over the strip of max(W_uu, 0)).
inline double k_constant(const LogPotential& w, int grid_density) {
    return std::sqrt(detail::curvature_sup(w, grid_density, 1.0));
}

/// max(K, sqrt(sup over the strip of max(-W_uu, 0))). The Riccati comparison
/// omega' <= B^2 - omega^2 needs B^2 >= -e^{2t} W_uu, which K alone does not
/// give where W_uu < 0.
inline double riccati_bound_constant(const LogPotential& w, int grid_density = 128) {
    return std::max(w.K, std::sqrt(detail::curvature_sup(w, grid_density, -1.0)));
}

/// Zero potential with a nominal (empty) support box.
inline RadialPotential make_zero_potential(double u_bound = 1.0, double r_outer = 1.0) {
    auto zero = [](double, double) { return 0.0; };
    RadialPotential v{zero, zero, zero, zero, u_bound, r_outer, r_outer, "zero"};
    return v;
}

/// V(u, r) = f(u) g(r).
inline RadialPotential product_potential(const BumpFunction& f, const BumpFunction& g) {
    if (!(g.lower() > 0.0))
        throw InvalidSupport("radial factor must be supported in r > 0");
    RadialPotential v;
    v.value = [f, g](double u, double r) { return f(u) * g(r); };
    v.du = [f, g](double u, double r) { return f.jet(u).d1 * g(r); };
    v.duu = [f, g](double u, double r) { return f.jet(u).d2 * g(r); };
    v.dr = [f, g](double u, double r) { return f(u) * g.jet(r).d1; };
    v.u_bound = std::max(std::abs(f.lower()), std::abs(f.upper()));
    v.r_inner = g.lower();
    v.r_outer = g.upper();
    v.description = "product";
    return v;
}

/// lambda * V, same support.
inline RadialPotential scale_potential(const RadialPotential& v, double lambda) {
    RadialPotential s = v;
    s.value = [f = v.value, lambda](double u, double r) { return lambda * f(u, r); };
    s.du = [f = v.du, lambda](double u, double r) { return lambda * f(u, r); };
    s.duu = [f = v.duu, lambda](double u, double r) { return lambda * f(u, r); };
    s.dr = [f = v.dr, lambda](double u, double r) { return lambda * f(u, r); };
    s.description = v.description + " scaled";
    return s;
}

inline LogPotential to_log_form(const RadialPotential& v, int grid_density = kDefaultGridDensity) {
    LogPotential w;
    w.value = [v](double u, double t) { return v.V(u, std::exp(t)); };
    w.du = [v](double u, double t) { return v.Vu(u, std::exp(t)); };
    w.duu = [v](double u, double t) { return v.Vuu(u, std::exp(t)); };
    w.dt = [v](double u, double t) {
        const double r = std::exp(t);
        return r * v.Vr(u, r);
    };
    w.u_bound = v.u_bound;
    w.T = std::log(v.r_outer);
    if (v.r_inner && *v.r_inner > 0.0) w.t_lower = std::log(*v.r_inner);
    w.radial = v;
    w.description = v.description;
    w.K = k_constant(w, grid_density);
    return w;
}

/// V(u, r) = W(u, ln r) for a potential defined directly in log time.
inline RadialPotential radial_form(const LogPotential& w) {
    if (w.radial) return *w.radial;
    RadialPotential v;
    v.value = [w](double u, double r) { return w.W(u, std::log(r)); };
    v.du = [w](double u, double r) { return w.Wu(u, std::log(r)); };
    v.duu = [w](double u, double r) { return w.Wuu(u, std::log(r)); };
    v.dr = [w](double u, double r) { return w.Wt(u, std::log(r)) / r; };
    v.u_bound = w.u_bound;
    v.r_outer = std::exp(w.T);
    if (std::isfinite(w.t_lower)) v.r_inner = std::exp(w.t_lower);
    v.description = w.description;
    return v;
}

/// H_N family member: W_N(u, t) = W(N u, t) / N^2.
inline LogPotential rescaled(const LogPotential& w, double N,
                             int grid_density = kDefaultGridDensity) {
    if (!(N > 0.0)) throw InvalidParameter("rescaling factor must be positive");
    LogPotential s;
    s.value = [w, N](double u, double t) { return w.W(N * u, t) / (N * N); };
    s.du = [w, N](double u, double t) { return w.Wu(N * u, t) / N; };
    s.duu = [w, N](double u, double t) { return w.Wuu(N * u, t); };
    s.dt = [w, N](double u, double t) { return w.Wt(N * u, t) / (N * N); };
    s.u_bound = w.u_bound / N;
    s.T = w.T;
    s.t_lower = w.t_lower;
    s.description = w.description + " rescaled";
    s.K = k_constant(s, grid_density);
    return s;
}

enum class Example446Variant { AsPrinted, ChainRule };

inline const char* to_string(Example446Variant v) {
    return v == Example446Variant::AsPrinted ? "as-printed" : "chain-rule";
}

/// W(u,t) = -e^{-2t} (Psi'(t) Phi(u) + 1/2 Psi(t)^k Phi'(u)^2), k = 1 as
/// printed, k = 2 for the chain-rule variant.
inline LogPotential example_446_potential(const BumpFunction& phi, const BumpFunction& psi,
                                          Example446Variant variant,
                                          int grid_density = kDefaultGridDensity) {
    const bool squared = variant == Example446Variant::ChainRule;
    auto pk = [squared](double p) { return squared ? p * p : p; };
    auto dpk = [squared](double p, double dp) { return squared ? 2.0 * p * dp : dp; };

    LogPotential w;
    w.value = [=](double u, double t) {
        const auto a = phi.jet(u);
        const auto b = psi.jet(t);
        return -std::exp(-2.0 * t) * (b.d1 * a.value + 0.5 * pk(b.value) * a.d1 * a.d1);
    };
    w.du = [=](double u, double t) {
        const auto a = phi.jet(u);
        const auto b = psi.jet(t);
        return -std::exp(-2.0 * t) * (b.d1 * a.d1 + pk(b.value) * a.d1 * a.d2);
    };
    w.duu = [=](double u, double t) {
        const auto a = phi.jet(u);
        const auto b = psi.jet(t);
        return -std::exp(-2.0 * t) * (b.d1 * a.d2 + pk(b.value) * (a.d2 * a.d2 + a.d1 * a.d3));
    };
    w.dt = [=](double u, double t) {
        const auto a = phi.jet(u);
        const auto b = psi.jet(t);
        // d/dt of e^{2t} W is -(Psi'' Phi + 1/2 (Psi^k)' Phi'^2); peel off e^{2t}.
        const double g = -(b.d1 * a.value + 0.5 * pk(b.value) * a.d1 * a.d1);
        const double dg = -(b.d2 * a.value + 0.5 * dpk(b.value, b.d1) * a.d1 * a.d1);
        return std::exp(-2.0 * t) * (dg - 2.0 * g);
    };
    w.u_bound = std::max(std::abs(phi.lower()), std::abs(phi.upper()));
    w.T = psi.upper();
    w.t_lower = psi.lower();
    w.description = std::string("example446 ") + to_string(variant);
    w.K = k_constant(w, grid_density);
    return w;
}

/// Compactly supported radial function U(r) on [r_lo, r_hi].
struct RadialFunction {
    std::function<double(double)> fn;
    double r_lo = 0.0;
    double r_hi = 0.0;

    double operator()(double r) const { return (r > r_lo && r < r_hi) ? fn(r) : 0.0; }
};

/// U(r) = max(0, sup_u V_uu(u, r)), the curvature envelope about the origin.
inline RadialFunction u_bound_function(const RadialPotential& v, int n,
                                       int grid_density = kDefaultGridDensity) {
    if (n < 3) throw InvalidParameter("u_bound_function requires n >= 3");
    RadialFunction U;
    U.r_lo = v.r_inner.value_or(0.0);
    U.r_hi = v.r_outer;
    U.fn = [v, grid_density](double r) {
        if (!(v.u_bound > 0.0)) return 0.0;
        auto best = grid_maximize([&](double u) { return v.Vuu(u, r); }, -v.u_bound, v.u_bound,
                                  grid_density);
        return std::max(0.0, best.value);
    };
    return U;
}

}  // namespace semilin
