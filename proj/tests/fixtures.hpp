#pragma once

// Curated potentials shared by the unit and acceptance tests.

#include <cmath>

#include "semilin/potential.hpp"

namespace fixtures {

/// max over s of the second derivative of exp(1 - 1/(1 - s^2)), from the
/// closed form on a dense grid.
inline double bump_d2_max() {
    static const double m = [] {
        double best = 0.0;
        for (int i = 0; i <= 200000; ++i) {
            const double s = -1.0 + 2.0 * i / 200000;
            const double q = 1 - s * s;
            if (q <= 0) continue;
            best = std::max(best, std::exp(1 - 1 / q) * (6 * s * s * s * s - 2) / (q * q * q * q));
        }
        return best;
    }();
    return m;
}

/// n >= 3 potential with sup_u V_uu(u, r) = peak * g(r), g a unit bump on [1, 2].
/// Condition A at n = 3 needs peak <= 1/16.
inline semilin::RadialPotential curvature_peak_potential(double peak) {
    return semilin::product_potential(semilin::make_bump(0, 1, peak / bump_d2_max()),
                                      semilin::make_bump(1.5, 0.5, 1.0));
}

/// Attractive n = 2 bump: W_uu = -2 amp / 1 > 0 at u = 0 for amp < 0, radial
/// factor on r in [1, 3] so T = ln 3.
inline semilin::LogPotential attractive_bump(double amp = -12.0, int density = 128) {
    return semilin::to_log_form(
        semilin::product_potential(semilin::make_bump(0, 1, amp), semilin::make_bump(2, 1, 1)), density);
}

/// n = 2 witness: narrow in u so the 4-side beats the t-derivative side
/// already at N = 1, and curved enough for conjugate points.
inline semilin::LogPotential witness_bump(int density = 128) {
    return semilin::to_log_form(
        semilin::product_potential(semilin::make_bump(0, 0.5, -2.0), semilin::make_bump(2, 1, 1)), density);
}

}  // namespace fixtures
