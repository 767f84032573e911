#pragma once

// Adaptive Simpson quadrature (1-D and nested 2-D) and golden-section search.
// Integrands here are smooth and compactly supported, so the rules subdivide
// at declared support boundaries and always refine a few levels before
// trusting the error estimate.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <utility>
#include <vector>

#include "semilin/errors.hpp"

namespace semilin {

struct QuadratureOptions {
    double abs_tol = 1e-10;
    double rel_tol = 0.0;
    int min_depth = 5;
    int max_depth = 48;
};

struct QuadratureResult {
    double value = 0.0;
    double error_estimate = 0.0;
    bool converged = true;
    std::size_t evaluations = 0;
};

namespace detail {

template <class F>
struct SimpsonState {
    F& f;
    const QuadratureOptions& opt;
    double error = 0.0;
    bool converged = true;
    std::size_t evaluations = 0;

    double eval(double x) {
        ++evaluations;
        return f(x);
    }

    double recurse(double a, double fa, double m, double fm, double b, double fb, double whole,
                   double tol, int depth) {
        const double lm = 0.5 * (a + m);
        const double rm = 0.5 * (m + b);
        const double flm = eval(lm);
        const double frm = eval(rm);
        const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        const double delta = left + right - whole;
        if (depth >= opt.max_depth) {
            converged = converged && std::abs(delta) <= 15.0 * tol;
            error += std::abs(delta) / 15.0;
            return left + right + delta / 15.0;
        }
        // Below this, delta is rounding noise and refining cannot help.
        const double noise = 64.0 * std::numeric_limits<double>::epsilon() *
                             (std::abs(left) + std::abs(right));
        if (depth >= opt.min_depth && std::abs(delta) <= std::max(15.0 * tol, noise)) {
            error += std::abs(delta) / 15.0;
            return left + right + delta / 15.0;
        }
        return recurse(a, fa, lm, flm, m, fm, left, 0.5 * tol, depth + 1) +
               recurse(m, fm, rm, frm, b, fb, right, 0.5 * tol, depth + 1);
    }
};

}  // namespace detail

/// Integrates f over [a, b], splitting first at every breakpoint strictly
/// inside the interval. Never throws; check `converged`.
template <class F>
QuadratureResult adaptive_simpson(F&& f, double a, double b, const QuadratureOptions& opt = {},
                                  std::vector<double> breakpoints = {}) {
    QuadratureResult out;
    if (a == b) return out;
    double sign = 1.0;
    if (a > b) {
        std::swap(a, b);
        sign = -1.0;
    }
    std::vector<double> nodes{a};
    std::sort(breakpoints.begin(), breakpoints.end());
    for (double x : breakpoints)
        if (x > a && x < b && x > nodes.back()) nodes.push_back(x);
    nodes.push_back(b);

    const double span = b - a;
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
        const double lo = nodes[i];
        const double hi = nodes[i + 1];
        detail::SimpsonState<std::remove_reference_t<F>> st{f, opt};
        const double fa = st.eval(lo);
        const double fb = st.eval(hi);
        const double m = 0.5 * (lo + hi);
        const double fm = st.eval(m);
        const double whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
        // Tolerance is shared across panels in proportion to their length.
        const double tol = opt.abs_tol * (hi - lo) / span;
        total += st.recurse(lo, fa, m, fm, hi, fb, whole, tol, 0);
        out.error_estimate += st.error;
        out.converged = out.converged && st.converged;
        out.evaluations += st.evaluations;
    }
    out.value = sign * total;
    if (opt.rel_tol > 0.0 && out.error_estimate > opt.rel_tol * std::abs(out.value) &&
        out.error_estimate > opt.abs_tol)
        out.converged = false;
    return out;
}

/// Same as adaptive_simpson but raises AccuracyError on non-convergence.
template <class F>
double integrate(F&& f, double a, double b, const QuadratureOptions& opt = {},
                 std::vector<double> breakpoints = {}) {
    auto r = adaptive_simpson(std::forward<F>(f), a, b, opt, std::move(breakpoints));
    if (!r.converged)
        throw AccuracyError("adaptive Simpson did not converge", r.value, r.error_estimate);
    return r.value;
}

/// Iterated adaptive Simpson over the box [x0,x1] x [y0,y1]; f(x, y).
/// The outer integrand is the inner integral over y.
template <class F>
QuadratureResult adaptive_simpson_2d(F&& f, double x0, double x1, double y0, double y1,
                                     const QuadratureOptions& opt = {},
                                     std::vector<double> x_breaks = {},
                                     std::vector<double> y_breaks = {}) {
    bool inner_ok = true;
    std::size_t evals = 0;
    double inner_err = 0.0;
    QuadratureOptions inner_opt = opt;
    // Inner errors act as noise on the outer integrand; keep them well below
    // the outer tolerance.
    inner_opt.abs_tol = 0.1 * opt.abs_tol / std::max(1.0, std::abs(x1 - x0));
    auto outer = [&](double x) {
        auto r = adaptive_simpson([&](double y) { return f(x, y); }, y0, y1, inner_opt, y_breaks);
        inner_ok = inner_ok && r.converged;
        evals += r.evaluations;
        inner_err = std::max(inner_err, r.error_estimate);
        return r.value;
    };
    auto r = adaptive_simpson(outer, x0, x1, opt, std::move(x_breaks));
    r.converged = r.converged && inner_ok;
    r.evaluations = evals;
    r.error_estimate += inner_err * std::abs(x1 - x0);
    return r;
}

struct Extremum {
    double x;
    double value;
};

/// Golden-section search for a maximum of f on [a, b].
template <class F>
Extremum golden_maximize(F&& f, double a, double b, double x_tol = 1e-12, int max_iter = 200) {
    constexpr double inv_phi = 0.6180339887498949;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = f(c);
    double fd = f(d);
    for (int i = 0; i < max_iter && std::abs(b - a) > x_tol; ++i) {
        if (fc >= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    return fc >= fd ? Extremum{c, fc} : Extremum{d, fd};
}

/// Grid maximum of f over [a, b] with `density` points, then golden-section
/// refinement in the two cells around the grid argmax. The result is never
/// below the grid maximum.
template <class F>
Extremum grid_maximize(F&& f, double a, double b, int density) {
    if (density < 2) throw InvalidParameter("grid density must be >= 2");
    const double h = (b - a) / (density - 1);
    Extremum best{a, f(a)};
    int best_i = 0;
    for (int i = 1; i < density; ++i) {
        const double x = (i == density - 1) ? b : a + i * h;
        const double v = f(x);
        if (v > best.value) {
            best = {x, v};
            best_i = i;
        }
    }
    const double lo = a + std::max(0, best_i - 1) * h;
    const double hi = std::min(b, a + std::min(density - 1, best_i + 1) * h);
    if (hi > lo) {
        auto refined = golden_maximize(f, lo, hi, 1e-13 * std::max(1.0, std::abs(hi)));
        if (refined.value > best.value) best = refined;
    }
    return best;
}

}  // namespace semilin
