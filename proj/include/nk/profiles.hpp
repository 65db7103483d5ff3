#ifndef NK_PROFILES_HPP
#define NK_PROFILES_HPP

#include <cmath>
#include <vector>

namespace nk {

/// C-infinity step: 0 for t <= 0, 1 for t >= 1, built from exp(-1/t).
inline double smooth_step(double t)
{
    if (t <= 0.0)
        return 0.0;
    if (t >= 1.0)
        return 1.0;
    const double a = std::exp(-1.0 / t);
    const double b = std::exp(-1.0 / (1.0 - t));
    return a / (a + b);
}

/// Radial plateau cutoff in u = |x|^2: 1 on [0, R^2/4], 0 on [R^2, inf).
inline double plateau_cutoff(double u, double radius)
{
    const double r2 = radius * radius;
    return 1.0 - smooth_step((u - 0.25 * r2) / (0.75 * r2));
}

enum class DyadicProfile {
    Smooth, // theta(t) = psi(t) - psi(2t), psi falling from 1 to 0 on [1, 2]
    Sharp,  // indicator of one dyadic interval
};

/// Falling step: 1 on [0, 1], 0 on [2, inf).
inline double dyadic_psi(double t) { return 1.0 - smooth_step(t - 1.0); }

/// Ratio C1 with support of the scale-j window inside [2^-j, C1 * 2^-j].
inline double window_span(DyadicProfile p) { return p == DyadicProfile::Smooth ? 4.0 : 2.0; }

/**
 * Scale-j window evaluated at r = |y| >= 0. The windows over all integer j
 * sum to 1 for r > 0, and window(j, r) vanishes unless
 * 2^-j <= r <= window_span * 2^-j.
 */
inline double dyadic_window(DyadicProfile p, int j, double r)
{
    if (p == DyadicProfile::Sharp) {
        const double a = std::ldexp(1.0, -j);
        return (r >= a && r < 2.0 * a) ? 1.0 : 0.0;
    }
    const double t = std::ldexp(r, j - 1);
    return dyadic_psi(t) - dyadic_psi(2.0 * t);
}

/// Sum of the windows j = lo..hi, in closed (telescoped) form.
inline double dyadic_window_sum(DyadicProfile p, int lo, int hi, double r)
{
    if (hi < lo)
        return 0.0;
    if (p == DyadicProfile::Sharp)
        return (r >= std::ldexp(1.0, -hi) && r < std::ldexp(1.0, 1 - lo)) ? 1.0 : 0.0;
    return dyadic_psi(std::ldexp(r, lo - 1)) - dyadic_psi(std::ldexp(r, hi));
}

/// Points inside the support of the scale-j window where it is not smooth or changes shape.
inline std::vector<double> window_breakpoints(DyadicProfile p, int j)
{
    const double a = std::ldexp(1.0, -j);
    if (p == DyadicProfile::Sharp)
        return {a, 2.0 * a};
    return {a, 2.0 * a, 4.0 * a};
}

} // namespace nk

#endif
