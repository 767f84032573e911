#pragma once

// Solution families pinned by their asymptotics (outer alpha/r^{n-2} + A, or
// inner A/r^{n-2} + alpha), their ordering in alpha, and the explicit
// first-order foliation of the log-time Newton equation.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "semilin/errors.hpp"
#include "semilin/jacobi.hpp"
#include "semilin/ode.hpp"
#include "semilin/odeflow.hpp"
#include "semilin/parallel.hpp"
#include "semilin/potential.hpp"

namespace semilin {

/// Some leaves failed to integrate.
class PartialFamilyError : public Error {
public:
    PartialFamilyError(const std::string& what, std::vector<double> failed)
        : Error(what), failed_(std::move(failed)) {}
    const std::vector<double>& failed_alphas() const noexcept { return failed_; }

private:
    std::vector<double> failed_;
};

enum class FamilyKind { NA, MA, Example446 };

inline const char* to_string(FamilyKind k) {
    switch (k) {
        case FamilyKind::NA: return "N_A";
        case FamilyKind::MA: return "M_A";
        case FamilyKind::Example446: return "example446";
    }
    return "";
}

struct LeafFamily {
    FamilyKind kind = FamilyKind::NA;
    int n = 3;
    double A = 0.0;
    std::vector<double> alphas;
    std::vector<Trajectory> leaves;
    std::vector<double> r_grid;
    /// u[i][k] = u(r_grid[k], alphas[i]).
    std::vector<std::vector<double>> u;
};

struct FamilyOptions {
    double r_min = 1e-4;
    double r_start = 0.0;  // 0 selects a default (2 r_outer for N_A, r_inner for M_A)
    double r_end = 0.0;    // M_A only; 0 selects 2 r_outer
    int grid_points = 512;
    unsigned jobs = 1;
};

namespace detail {

inline std::vector<double> geometric_grid(double a, double b, int points) {
    std::vector<double> g(points);
    const double la = std::log(a);
    const double lb = std::log(b);
    for (int k = 0; k < points; ++k) g[k] = std::exp(la + (lb - la) * k / (points - 1));
    g.front() = a;
    g.back() = b;
    return g;
}

inline void require_increasing(const std::vector<double>& alphas) {
    if (alphas.empty()) throw InvalidParameter("alpha list is empty");
    for (std::size_t i = 1; i < alphas.size(); ++i)
        if (!(alphas[i] > alphas[i - 1])) throw InvalidParameter("alphas must be strictly increasing");
}

/// Integrates one leaf per alpha from (r_s, u(alpha), u'(alpha)) over [r_lo, r_hi].
template <class InitFn>
LeafFamily build_family(const LogPotential& w, FamilyKind kind, int n, double A,
                        const std::vector<double>& alphas, double r_s, double r_lo, double r_hi,
                        const IntegratorConfig& cfg, const FamilyOptions& opt, InitFn init) {
    LeafFamily fam;
    fam.kind = kind;
    fam.n = n;
    fam.A = A;
    fam.alphas = alphas;
    fam.leaves.resize(alphas.size());
    fam.r_grid = geometric_grid(r_lo, r_hi, opt.grid_points);
    fam.u.assign(alphas.size(), {});
    std::vector<char> failed(alphas.size(), 0);
    const auto leaf_cfg = cfg.with_range(std::log(r_lo), std::log(r_hi));
    parallel_for(alphas.size(), opt.jobs, [&](std::size_t i) {
        try {
            const auto [u0, du0] = init(alphas[i], r_s);
            fam.leaves[i] = integrate_radial_ivp(w, n, r_s, u0, du0, leaf_cfg);
            auto& row = fam.u[i];
            row.resize(fam.r_grid.size());
            for (std::size_t k = 0; k < fam.r_grid.size(); ++k)
                row[k] = fam.leaves[i].u_at_radius(fam.r_grid[k]);
        } catch (const IntegrationFailure&) {
            failed[i] = 1;
        }
    });
    std::vector<double> bad;
    for (std::size_t i = 0; i < alphas.size(); ++i)
        if (failed[i]) bad.push_back(alphas[i]);
    if (!bad.empty()) {
        std::ostringstream os;
        os << bad.size() << " leaves failed to integrate";
        throw PartialFamilyError(os.str(), bad);
    }
    return fam;
}

}  // namespace detail

/// Leaves u = alpha / r^{n-2} + A outside the support, integrated inward to r_min.
inline LeafFamily build_NA_family(const RadialPotential& v, int n, double A,
                                  const std::vector<double>& alphas, const IntegratorConfig& cfg,
                                  const FamilyOptions& opt = {}) {
    if (n < 3) throw InvalidParameter("N_A families need n >= 3");
    detail::require_increasing(alphas);
    const double r_s = opt.r_start > 0.0 ? opt.r_start : 2.0 * v.r_outer;
    if (!(r_s > v.r_outer)) throw InvalidParameter("r_start must lie outside the support");
    const LogPotential w = to_log_form(v, 2);
    return detail::build_family(w, FamilyKind::NA, n, A, alphas, r_s, opt.r_min, r_s, cfg, opt,
                                [n, A](double alpha, double r) {
                                    return std::pair{alpha * std::pow(r, 2 - n) + A,
                                                     -(n - 2) * alpha * std::pow(r, 1 - n)};
                                });
}

/// Leaves u = A / r^{n-2} + alpha inside the inner vacuum r <= r_inner.
inline LeafFamily build_MA_family(const RadialPotential& v, int n, double A,
                                  const std::vector<double>& alphas, const IntegratorConfig& cfg,
                                  const FamilyOptions& opt = {}) {
    if (n < 3) throw InvalidParameter("M_A families need n >= 3");
    if (!v.r_inner || !(*v.r_inner > 0.0))
        throw Inapplicable("M_A families need a potential vanishing for 0 < r <= r_inner");
    detail::require_increasing(alphas);
    const double r_s = opt.r_start > 0.0 ? opt.r_start : *v.r_inner;
    if (!(r_s <= *v.r_inner)) throw InvalidParameter("r_start must lie in the inner vacuum");
    const double r_end = opt.r_end > 0.0 ? opt.r_end : 2.0 * v.r_outer;
    const double r_lo = std::min(opt.r_min, r_s);
    const LogPotential w = to_log_form(v, 2);
    return detail::build_family(w, FamilyKind::MA, n, A, alphas, r_s, r_lo, r_end, cfg, opt,
                                [n, A](double alpha, double r) {
                                    return std::pair{A * std::pow(r, 2 - n) + alpha,
                                                     -(n - 2) * A * std::pow(r, 1 - n)};
                                });
}

struct OrderingReport {
    /// min over the r-grid of u(r, alpha_{i+1}) - u(r, alpha_i), one per pair.
    std::vector<double> gaps;
    double min_gap = std::numeric_limits<double>::infinity();
    /// min over the r-grid of the difference quotient du/dalpha, one per pair.
    std::vector<double> dudalpha_min;
    double min_dudalpha = std::numeric_limits<double>::infinity();
    bool degenerate_input = false;
    bool gap_ordered = true;
    bool derivative_ordered = true;

    bool ordered() const noexcept { return gap_ordered && derivative_ordered && !degenerate_input; }
};

inline OrderingReport check_ordering(const LeafFamily& fam) {
    if (fam.alphas.empty()) throw PreconditionError("family has no leaves");
    if (fam.u.size() != fam.alphas.size()) throw ContractViolation("leaf/grid mismatch");
    for (const auto& row : fam.u)
        if (row.size() != fam.r_grid.size()) throw ContractViolation("leaf/grid mismatch");
    OrderingReport rep;
    for (std::size_t i = 0; i + 1 < fam.alphas.size(); ++i) {
        const double da = fam.alphas[i + 1] - fam.alphas[i];
        double gap = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < fam.r_grid.size(); ++k)
            gap = std::min(gap, fam.u[i + 1][k] - fam.u[i][k]);
        rep.gaps.push_back(gap);
        rep.min_gap = std::min(rep.min_gap, gap);
        if (!(gap > 0.0)) rep.gap_ordered = false;
        if (!(da > 0.0)) {
            rep.degenerate_input = true;
            rep.derivative_ordered = false;
            rep.dudalpha_min.push_back(std::numeric_limits<double>::quiet_NaN());
            continue;
        }
        const double d = gap / da;
        rep.dudalpha_min.push_back(d);
        rep.min_dudalpha = std::min(rep.min_dudalpha, d);
        if (!(d > 0.0)) rep.derivative_ordered = false;
    }
    return rep;
}

/// Jacobi field d u / d alpha along leaf i: matches the decaying free mode
/// r^{2-n} at the starting radius of an N_A leaf and is integrated inward.
inline JacobiField leaf_variation_field(const LeafFamily& fam, std::size_t i,
                                        const IntegratorConfig& cfg) {
    const auto& leaf = fam.leaves.at(i);
    const int n = fam.n;
    const double t_s = fam.kind == FamilyKind::NA ? leaf.t_max() : std::log(fam.r_grid.front());
    const double r_s = std::exp(t_s);
    double xi0 = 1.0;
    double dxi0 = 0.0;
    if (fam.kind == FamilyKind::NA) {
        xi0 = std::pow(r_s, 2 - n);
        dxi0 = -(n - 2) * std::pow(r_s, 1 - n);
    }
    const double t_e = fam.kind == FamilyKind::NA ? leaf.t_min() : leaf.t_max();
    return integrate_jacobi(leaf, xi0, dxi0, JacobiMode::RadialForm, cfg.with_range(t_s, t_e));
}

struct FocalPair {
    double r1 = 0.0;
    double r2 = 0.0;
};

/// For each r1, the field with xi(r1) = 1, xi'(r1) = 0 integrated outward;
/// any later zero r2 is a focal pair.
inline std::vector<FocalPair> focal_scan(const Trajectory& traj, const std::vector<double>& r1_list,
                                         const IntegratorConfig& cfg) {
    std::vector<FocalPair> pairs;
    for (double r1 : r1_list) {
        const double t1 = std::log(r1);
        if (!(t1 < traj.t_max()) || t1 < traj.t_min()) continue;
        auto field = integrate_jacobi(traj, 1.0, 0.0, JacobiMode::RadialForm,
                                      cfg.with_range(t1, traj.t_max()));
        for (double tz : find_vanishing(field, VanishingKind::Focal, t1))
            pairs.push_back({r1, std::exp(tz)});
    }
    return pairs;
}

struct Example446Leaf {
    double u0 = 0.0;
    double max_residual = 0.0;
    DenseSolution<1> path;
};

struct Example446Report {
    Example446Variant variant = Example446Variant::ChainRule;
    std::vector<Example446Leaf> leaves;
    double max_residual = 0.0;
    double initial_min_gap = std::numeric_limits<double>::infinity();
    double min_gap = std::numeric_limits<double>::infinity();
    std::size_t crossings = 0;
    std::pair<double, double> t_window{0.0, 0.0};

    bool non_crossing() const noexcept { return crossings == 0; }
};

/// Integrates u' = Phi'(u) Psi(t) for each u0 and measures the Newton
/// residual u'' + e^{2t} W_u(u, t) along it, with u'' obtained by
/// differentiating the first-order equation along the dense path.
inline Example446Report example_446_check(const BumpFunction& phi, const BumpFunction& psi,
                                          const std::vector<double>& u0_grid,
                                          const IntegratorConfig& cfg, Example446Variant variant,
                                          unsigned jobs = 1) {
    Example446Report rep;
    rep.variant = variant;
    const LogPotential w = example_446_potential(phi, psi, variant, 2);
    const double t0 = psi.lower() - 1.0;
    const double t1 = psi.upper() + 1.0;
    rep.t_window = {t0, t1};
    auto rhs = [&](double t, const Vec<1>& y) -> Vec<1> {
        return {phi.jet(y[0]).d1 * psi(t)};
    };
    const auto leaf_cfg = cfg.with_range(t0, t1);
    rep.leaves.resize(u0_grid.size());
    parallel_for(u0_grid.size(), jobs, [&](std::size_t i) {
        auto& leaf = rep.leaves[i];
        leaf.u0 = u0_grid[i];
        leaf.path = integrate_dense<1>(rhs, t0, Vec<1>{u0_grid[i]}, t0, t1, leaf_cfg);
        for (double t = t0; t <= t1; t += 5e-3) {
            const double u = leaf.path(t)[0];
            const auto a = phi.jet(u);
            const auto b = psi.jet(t);
            const double vel = a.d1 * b.value;
            const double acc = a.d2 * vel * b.value + a.d1 * b.d1;
            leaf.max_residual =
                std::max(leaf.max_residual, std::abs(acc + std::exp(2 * t) * w.Wu(u, t)));
        }
    });
    for (const auto& l : rep.leaves) rep.max_residual = std::max(rep.max_residual, l.max_residual);

    std::vector<std::size_t> order(rep.leaves.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](auto a, auto b) { return rep.leaves[a].u0 < rep.leaves[b].u0; });
    const int samples = 2001;
    for (std::size_t j = 0; j + 1 < order.size(); ++j) {
        const auto& lo = rep.leaves[order[j]];
        const auto& hi = rep.leaves[order[j + 1]];
        rep.initial_min_gap = std::min(rep.initial_min_gap, hi.u0 - lo.u0);
        for (int k = 0; k < samples; ++k) {
            const double t = t0 + (t1 - t0) * k / (samples - 1);
            const double gap = hi.path(t)[0] - lo.path(t)[0];
            rep.min_gap = std::min(rep.min_gap, gap);
            if (!(gap > 0.0)) {
                ++rep.crossings;
                break;
            }
        }
    }
    return rep;
}

struct VariantSelection {
    Example446Variant selected = Example446Variant::ChainRule;
    double residual_as_printed = 0.0;
    double residual_chain_rule = 0.0;
};

inline std::vector<double> default_example446_u0_grid(const BumpFunction& phi, int count = 11) {
    std::vector<double> g(count);
    for (int i = 0; i < count; ++i)
        g[i] = phi.lower() + (phi.upper() - phi.lower()) * (i + 0.5) / count;
    return g;
}

/// Picks the variant whose leaves actually solve the Newton equation.
inline VariantSelection select_example446_variant(const BumpFunction& phi, const BumpFunction& psi,
                                                  const IntegratorConfig& cfg) {
    const auto grid = default_example446_u0_grid(phi);
    VariantSelection sel;
    sel.residual_as_printed =
        example_446_check(phi, psi, grid, cfg, Example446Variant::AsPrinted).max_residual;
    sel.residual_chain_rule =
        example_446_check(phi, psi, grid, cfg, Example446Variant::ChainRule).max_residual;
    sel.selected = sel.residual_as_printed < sel.residual_chain_rule ? Example446Variant::AsPrinted
                                                                     : Example446Variant::ChainRule;
    return sel;
}

}  // namespace semilin
