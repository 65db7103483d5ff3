#ifndef NK_RIESZ_HPP
#define NK_RIESZ_HPP

#include "nk/kernel.hpp"
#include "nk/profiles.hpp"
#include "nk/quadrature.hpp"
#include "nk/rational.hpp"

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

namespace nk {

struct RieszOptions {
    int grid_density = 32;
    double radius = 0.5; // cutoff radius in the original coordinates
    double cone = 1.0;   // |x'| < cone in blown-up coordinates
    int quad_order = 16;
    std::vector<int> j1_values = {2, 4, 6, 8};
    std::vector<int> jt_values = {2, 5, 8}; // transverse indices
    int decay_j_lo = 2;
    int decay_j_hi = 14;
};

/// Blown-up local Riesz kernel on the cone around the x1-axis.
class RieszBlowup {
public:
    RieszBlowup(int n, double radius, double cone) : n_(n), radius_(radius), cone_(cone)
    {
        if (n < 2 || n > 3)
            throw std::invalid_argument("Riesz demo supports n = 2 or 3");
    }

    int nvars() const { return n_; }

    /// k(x) = phi(|beta1 x|^2) chi(|x'|^2) x1 / |beta1 x|^(n+1)
    double operator()(std::span<const double> x) const
    {
        if (x[0] == 0.0)
            return 0.0;
        double t2 = 0;
        for (int l = 1; l < n_; ++l)
            t2 += x[l] * x[l];
        const double chi = plateau_cutoff(t2, cone_);
        if (chi == 0.0)
            return 0.0;
        const double r2 = x[0] * x[0] * (1.0 + t2);
        const double phi = plateau_cutoff(r2, radius_);
        if (phi == 0.0)
            return 0.0;
        return phi * chi * x[0] / std::pow(r2, 0.5 * (n_ + 1));
    }

    /// |Jac beta1| = |x1|^(n-1)
    double jacobian(std::span<const double> x) const { return std::pow(std::abs(x[0]), n_ - 1); }

    double piece(std::span<const double> x, std::span<const int> j) const
    {
        double w = 1.0;
        for (int l = 0; l < n_ && w != 0.0; ++l)
            w *= dyadic_window(DyadicProfile::Smooth, j[l], std::abs(x[l]));
        return w == 0.0 ? 0.0 : w * (*this)(x);
    }

private:
    int n_;
    double radius_, cone_;
};

struct RieszConstants {
    double C_16 = 0; // sup |k_j| |x1|^n
    double C_17 = 0; // sup |d_l k_j| |x_l| |x1|^n
};

struct RieszReport {
    int n = 0;
    Rational delta0;
    Exponent monomial; // exponents m with |x^m|^-delta0 = |x1|^-n
    RieszConstants coarse, refined;
    double relative_change = 0;
    bool grid_stable = false;
    double x1_cancellation_residual = 0;
    std::vector<int> decay_j;
    std::vector<double> decay_values; // max |line integral along x2 of k_j |Jac||
    double eps0_fit = 0;
    bool parity_invariant = true;
    double C0 = 0; // max of the measured constants and the support ratio
};

namespace detail {

inline RieszConstants riesz_constants(const RieszBlowup& k, const std::vector<std::vector<int>>& pieces, int density)
{
    const int n = k.nvars();
    const double span = window_span(DyadicProfile::Smooth);
    const int per_axis = static_cast<int>(std::lround(std::log2(span) * density));
    RieszConstants c;
    std::vector<double> x(n), z(n);
    for (const auto& j : pieces) {
        std::vector<int> idx(n, 0);
        while (true) {
            for (int l = 0; l < n; ++l)
                x[l] = std::ldexp(1.0, -j[l]) * std::exp2((idx[l] + 0.5) / density);
            const double mono = std::pow(std::abs(x[0]), n);
            c.C_16 = std::max(c.C_16, std::abs(k.piece(x, j)) * mono);
            for (int l = 0; l < n; ++l) {
                const double h = std::ldexp(1.0, -j[l]) / 64.0;
                z = x;
                z[l] = x[l] + h;
                const double fp = k.piece(z, j);
                z[l] = x[l] - h;
                const double fm = k.piece(z, j);
                c.C_17 = std::max(c.C_17, std::abs(fp - fm) / (2 * h) * std::abs(x[l]) * mono);
            }
            int l = 0;
            while (l < n && ++idx[l] >= per_axis)
                idx[l++] = 0;
            if (l == n)
                break;
        }
    }
    return c;
}

// max over transverse samples of |integral over x_axis of k_j |Jac||, mirrored node pairs
inline double riesz_line_integral(const RieszBlowup& k, std::span<const int> j, int axis, int quad_order)
{
    const int n = k.nvars();
    const QuadRule r = composite_rule(window_breakpoints(DyadicProfile::Smooth, j[axis]), 4, quad_order);
    const int samples = 5;
    std::vector<int> idx(n, 0);
    std::vector<double> x(n);
    double worst = 0;
    while (true) {
        for (int l = 0; l < n; ++l)
            if (l != axis) {
                x[l] = std::ldexp(1.0, -j[l]) * std::pow(4.0, (idx[l] % samples + 0.5) / samples);
                if (idx[l] >= samples)
                    x[l] = -x[l];
            }
        double s = 0;
        for (std::size_t q = 0; q < r.size(); ++q) {
            x[axis] = r.nodes[q];
            const double fp = k.piece(x, j) * k.jacobian(x);
            x[axis] = -r.nodes[q];
            const double fm = k.piece(x, j) * k.jacobian(x);
            s += r.weights[q] * (fp + fm);
        }
        worst = std::max(worst, std::abs(s));
        int l = 0;
        while (l < n && (l == axis || ++idx[l] >= 2 * samples)) {
            if (l != axis)
                idx[l] = 0;
            ++l;
        }
        if (l == n)
            break;
    }
    return worst;
}

} // namespace detail

/**
 * Measures the blown-up bounds for the local Riesz kernel phi(x) x1/|x|^(n+1)
 * on the x1 cone: magnitude and derivative constants against |x1|^-n at two
 * grid densities, the x1 line integrals against |Jac|, and a decay fit of the
 * line integrals along x2 in j_2.
 */
inline RieszReport riesz_blowup_check(int n, const RieszOptions& opt = {})
{
    if (opt.grid_density < 8)
        throw std::invalid_argument("grid density too small");
    RieszBlowup k(n, opt.radius, opt.cone);
    RieszReport rep;
    rep.n = n;
    rep.delta0 = Rational(n, 2);
    rep.monomial.assign(n, 0);
    rep.monomial[0] = 2;

    std::vector<std::vector<int>> pieces;
    for (int j1 : opt.j1_values)
        for (int jt : opt.jt_values) {
            std::vector<int> j(n, jt);
            j[0] = j1;
            pieces.push_back(j);
        }
    rep.coarse = detail::riesz_constants(k, pieces, opt.grid_density);
    rep.refined = detail::riesz_constants(k, pieces, 2 * opt.grid_density);
    rep.relative_change = std::max(std::abs(rep.refined.C_16 / rep.coarse.C_16 - 1.0),
                                   std::abs(rep.refined.C_17 / rep.coarse.C_17 - 1.0));
    rep.grid_stable = std::isfinite(rep.relative_change) && rep.relative_change <= 0.05;

    for (const auto& j : pieces)
        rep.x1_cancellation_residual
            = std::max(rep.x1_cancellation_residual, detail::riesz_line_integral(k, j, 0, opt.quad_order));

    // decay along x2 with the other indices held at their first values
    std::vector<int> j(n, opt.jt_values.front());
    j[0] = opt.j1_values.front();
    std::vector<double> lj, lv;
    for (int j2 = opt.decay_j_lo; j2 <= opt.decay_j_hi; ++j2) {
        j[1] = j2;
        const double v = detail::riesz_line_integral(k, j, 1, opt.quad_order);
        rep.decay_j.push_back(j2);
        rep.decay_values.push_back(v);
        if (v > 0.0) {
            lj.push_back(j2);
            lv.push_back(std::log2(v));
        }
    }
    if (lj.size() >= 2) {
        double mj = 0, mv = 0;
        for (std::size_t i = 0; i < lj.size(); ++i)
            mj += lj[i], mv += lv[i];
        mj /= lj.size();
        mv /= lv.size();
        double sxy = 0, sxx = 0;
        for (std::size_t i = 0; i < lj.size(); ++i) {
            sxy += (lj[i] - mj) * (lv[i] - mv);
            sxx += (lj[i] - mj) * (lj[i] - mj);
        }
        rep.eps0_fit = -sxy / sxx;
    }

    // |k| is even in each transverse variable
    std::vector<double> a(n), b(n);
    for (int t = 1; t <= 50; ++t) {
        a[0] = 0.02 * t / 50.0 + 1e-3;
        for (int l = 1; l < n; ++l)
            a[l] = 0.9 * std::sin(0.37 * t * l);
        b = a;
        b[1] = -b[1];
        if (std::abs(k(a)) != std::abs(k(b)))
            rep.parity_invariant = false;
    }
    rep.C0 = std::max({rep.refined.C_16, rep.refined.C_17, window_span(DyadicProfile::Smooth)});
    return rep;
}

} // namespace nk

#endif
