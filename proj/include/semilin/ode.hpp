#pragma once

// Dormand-Prince 5(4) with embedded error control and Hairer's fourth-order
// continuous extension. Works forward and backward in time; the resulting
// DenseSolution can be queried anywhere in the covered interval.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "semilin/errors.hpp"

namespace semilin {

template <std::size_t N>
using Vec = std::array<double, N>;

struct IntegratorConfig {
    double rel_tol = 1e-10;
    double abs_tol = 1e-10;
    double max_step = 0.05;
    std::pair<double, double> t_range{0.0, 1.0};
    double event_tol = 1e-12;

    void validate() const {
        if (!(rel_tol > 0.0) || !(abs_tol > 0.0) || !(event_tol > 0.0))
            throw InvalidParameter("integrator tolerances must be positive");
        if (!(max_step > 0.0)) throw InvalidParameter("max_step must be positive");
        if (!(t_range.first != t_range.second) || !std::isfinite(t_range.first) ||
            !std::isfinite(t_range.second))
            throw InvalidParameter("t_range must be finite and non-degenerate");
    }

    IntegratorConfig with_range(double a, double b) const {
        IntegratorConfig c = *this;
        c.t_range = {a, b};
        return c;
    }
    IntegratorConfig tightened(double factor) const {
        IntegratorConfig c = *this;
        c.rel_tol *= factor;
        c.abs_tol *= factor;
        return c;
    }
};

template <std::size_t N>
class DenseSolution {
public:
    struct Step {
        double t0 = 0.0;
        double h = 0.0;
        std::array<Vec<N>, 5> coeff{};

        double lo() const noexcept { return h > 0 ? t0 : t0 + h; }
        double hi() const noexcept { return h > 0 ? t0 + h : t0; }

        Vec<N> eval(double t) const noexcept {
            const double th = (t - t0) / h;
            const double th1 = 1.0 - th;
            Vec<N> y;
            for (std::size_t i = 0; i < N; ++i)
                y[i] = coeff[0][i] +
                       th * (coeff[1][i] +
                             th1 * (coeff[2][i] + th * (coeff[3][i] + th1 * coeff[4][i])));
            return y;
        }

        /// d/dt of the continuous extension.
        Vec<N> derivative(double t) const noexcept {
            const double th = (t - t0) / h;
            const double th1 = 1.0 - th;
            Vec<N> d;
            for (std::size_t i = 0; i < N; ++i) {
                const double C = coeff[3][i] + th1 * coeff[4][i];
                const double B = coeff[2][i] + th * C;
                const double A = coeff[1][i] + th1 * B;
                const double dB = C - th * coeff[4][i];
                const double dA = -B + th1 * dB;
                d[i] = (A + th * dA) / h;
            }
            return d;
        }
    };

    DenseSolution() = default;

    bool empty() const noexcept { return steps_.empty(); }
    double t_min() const noexcept { return steps_.front().lo(); }
    double t_max() const noexcept { return steps_.back().hi(); }
    bool covers(double t) const noexcept {
        return !steps_.empty() && t >= t_min() && t <= t_max();
    }
    const std::vector<Step>& steps() const noexcept { return steps_; }

    Vec<N> operator()(double t) const {
        if (!covers(t)) throw InsufficientRange("dense output queried outside its range");
        auto it = std::lower_bound(steps_.begin(), steps_.end(), t,
                                   [](const Step& s, double x) { return s.hi() < x; });
        if (it == steps_.end()) it = std::prev(steps_.end());
        return it->eval(t);
    }

    Vec<N> derivative(double t) const {
        if (!covers(t)) throw InsufficientRange("dense output queried outside its range");
        auto it = std::lower_bound(steps_.begin(), steps_.end(), t,
                                   [](const Step& s, double x) { return s.hi() < x; });
        if (it == steps_.end()) it = std::prev(steps_.end());
        return it->derivative(t);
    }

    /// Step boundaries in increasing order.
    std::vector<double> knots() const {
        std::vector<double> k;
        k.reserve(steps_.size() + 1);
        for (const auto& s : steps_) k.push_back(s.lo());
        if (!steps_.empty()) k.push_back(t_max());
        return k;
    }

    /// Grid with spacing at most `spacing` that includes every knot.
    std::vector<double> sample_grid(double spacing) const {
        std::vector<double> g;
        const auto k = knots();
        for (std::size_t i = 0; i + 1 < k.size(); ++i) {
            const int m = std::max(1, static_cast<int>(std::ceil((k[i + 1] - k[i]) / spacing)));
            for (int j = 0; j < m; ++j) g.push_back(k[i] + (k[i + 1] - k[i]) * j / m);
        }
        if (!k.empty()) g.push_back(k.back());
        return g;
    }

    /// Builds from steps taken in either direction; merges two halves.
    void append_steps(std::vector<Step> more) {
        steps_.insert(steps_.end(), more.begin(), more.end());
        std::sort(steps_.begin(), steps_.end(),
                  [](const Step& a, const Step& b) { return a.lo() < b.lo(); });
    }

private:
    std::vector<Step> steps_;
};

namespace dopri {
inline constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
inline constexpr double a21 = 1.0 / 5;
inline constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
inline constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
inline constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                        a54 = -212.0 / 729;
inline constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                        a64 = 49.0 / 176, a65 = -5103.0 / 18656;
inline constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                        a75 = -2187.0 / 6784, a76 = 11.0 / 84;
inline constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                        e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
inline constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                        d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                        d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;
}  // namespace dopri

/// Local error target as a fraction of the user tolerance, so that the
/// accumulated global error stays within a few multiples of rel_tol.
inline constexpr double kLocalTolFactor = 0.1;

template <std::size_t N>
struct IntegrationRun {
    std::vector<typename DenseSolution<N>::Step> steps;
    double t_end = 0.0;
    Vec<N> y_end{};
    bool stopped = false;  // true if the stop predicate fired
};

/// Integrates y' = f(t, y) from t0 to t1 (either direction). If `stop`
/// returns true for an accepted state, integration ends after that step.
template <std::size_t N, class Rhs>
IntegrationRun<N> dopri5(Rhs&& f, double t0, const Vec<N>& y0, double t1,
                         const IntegratorConfig& cfg,
                         const std::function<bool(double, const Vec<N>&)>& stop = {}) {
    using namespace dopri;
    IntegrationRun<N> run;
    run.t_end = t0;
    run.y_end = y0;
    if (t1 == t0) return run;
    const double dir = t1 > t0 ? 1.0 : -1.0;
    const double span = std::abs(t1 - t0);

    auto axpy = [](Vec<N> y, double h, std::initializer_list<std::pair<double, const Vec<N>*>> ks) {
        for (const auto& [c, k] : ks)
            for (std::size_t i = 0; i < N; ++i) y[i] += h * c * (*k)[i];
        return y;
    };

    double t = t0;
    Vec<N> y = y0;
    Vec<N> k1 = f(t, y);
    double h = dir * std::min({cfg.max_step, span, 1e-3 * std::max(1.0, span)});
    constexpr std::size_t kMaxSteps = 20'000'000;
    std::size_t count = 0;
    bool last_rejected = false;

    while (dir * (t1 - t) > 0.0) {
        if (++count > kMaxSteps)
            throw IntegrationFailure("step budget exhausted", t, {y.begin(), y.end()});
        if (std::abs(h) < 1e-14 * std::max(1.0, std::abs(t)))
            throw IntegrationFailure("step size underflow", t, {y.begin(), y.end()});
        if (dir * (t + h - t1) > 0.0) h = t1 - t;

        const Vec<N> y2 = axpy(y, h, {{a21, &k1}});
        const Vec<N> k2 = f(t + c2 * h, y2);
        const Vec<N> y3 = axpy(y, h, {{a31, &k1}, {a32, &k2}});
        const Vec<N> k3 = f(t + c3 * h, y3);
        const Vec<N> y4 = axpy(y, h, {{a41, &k1}, {a42, &k2}, {a43, &k3}});
        const Vec<N> k4 = f(t + c4 * h, y4);
        const Vec<N> y5 = axpy(y, h, {{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}});
        const Vec<N> k5 = f(t + c5 * h, y5);
        const Vec<N> y6 =
            axpy(y, h, {{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}});
        const double t_new = (h == t1 - t) ? t1 : t + h;
        const Vec<N> k6 = f(t + h, y6);
        const Vec<N> y_new =
            axpy(y, h, {{a71, &k1}, {a73, &k3}, {a74, &k4}, {a75, &k5}, {a76, &k6}});
        const Vec<N> k7 = f(t + h, y_new);

        double err = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            const double e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] +
                                  e6 * k6[i] + e7 * k7[i]);
            const double sc = kLocalTolFactor *
                              (cfg.abs_tol + cfg.rel_tol * std::max(std::abs(y[i]), std::abs(y_new[i])));
            err += (e / sc) * (e / sc);
        }
        err = std::sqrt(err / N);
        if (!std::isfinite(err)) err = 1e10;

        if (err <= 1.0) {
            typename DenseSolution<N>::Step s;
            s.t0 = t;
            s.h = h;
            for (std::size_t i = 0; i < N; ++i) {
                const double dy = y_new[i] - y[i];
                const double bspl = h * k1[i] - dy;
                s.coeff[0][i] = y[i];
                s.coeff[1][i] = dy;
                s.coeff[2][i] = bspl;
                s.coeff[3][i] = dy - h * k7[i] - bspl;
                s.coeff[4][i] = h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] +
                                     d6 * k6[i] + d7 * k7[i]);
            }
            run.steps.push_back(s);
            t = t_new;
            y = y_new;
            k1 = k7;
            double fac = err > 0.0 ? 0.9 * std::pow(err, -0.2) : 5.0;
            fac = std::clamp(fac, 0.2, last_rejected ? 1.0 : 5.0);
            last_rejected = false;
            h = dir * std::min(std::abs(h) * fac, cfg.max_step);
            if (stop && stop(t, y)) {
                run.stopped = true;
                break;
            }
        } else {
            last_rejected = true;
            h *= std::max(0.2, 0.9 * std::pow(err, -0.2));
        }
    }
    run.t_end = t;
    run.y_end = y;
    return run;
}

/// Dense solution over [min(lo, t0), max(hi, t0)] starting from (t0, y0).
template <std::size_t N, class Rhs>
DenseSolution<N> integrate_dense(Rhs&& f, double t0, const Vec<N>& y0, double lo, double hi,
                                 const IntegratorConfig& cfg) {
    DenseSolution<N> sol;
    if (hi > t0) sol.append_steps(dopri5<N>(f, t0, y0, hi, cfg).steps);
    if (lo < t0) sol.append_steps(dopri5<N>(f, t0, y0, lo, cfg).steps);
    return sol;
}

}  // namespace semilin
