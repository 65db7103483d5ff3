#ifndef NK_KERNEL_HPP
#define NK_KERNEL_HPP

#include "nk/newton.hpp"
#include "nk/poly.hpp"
#include "nk/profiles.hpp"
#include "nk/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace nk {

enum class SignMode {
    Symmetrized, // prod sgn(y_l) * |b(|y_1|, ..., |y_n|)|^-delta0
    Product,     // prod sgn(y_l) * |b(y)|^-delta0
    Unsigned,    // |b(y)|^-delta0, no cancellation
};

struct KernelOptions {
    double radius = 0.5;
    SignMode sign = SignMode::Symmetrized;
    DyadicProfile profile = DyadicProfile::Smooth;
    std::vector<double> cutoff_shift; // empty, or a centre for the cutoff bump
};

using TestFunction = std::function<double(std::span<const double>)>;

namespace detail {

struct KernelData {
    MultiPoly b;
    NewtonPolyhedron np;
    Rational delta0;
    double delta0_value;
    KernelOptions opt;
};

inline constexpr int max_kernel_nvars = 6;

} // namespace detail

/// K(y) = sign(y) * phi(|y - c|^2) * |b|^-delta0 with the plateau cutoff phi of radius R.
class Kernel {
public:
    Kernel(MultiPoly b, KernelOptions opt = {})
    {
        if (b.is_zero())
            throw std::invalid_argument("kernel polynomial is identically zero");
        const int n = b.nvars();
        if (n > detail::max_kernel_nvars)
            throw std::invalid_argument("kernel supports at most 6 variables");
        if (b.coefficient(Exponent(n, 0)) != 0)
            throw std::invalid_argument("kernel polynomial must vanish at the origin");
        if (!(opt.radius > 0.0) || !std::isfinite(opt.radius))
            throw std::invalid_argument("support radius must be positive");
        if (!opt.cutoff_shift.empty() && static_cast<int>(opt.cutoff_shift.size()) != n)
            throw std::invalid_argument("cutoff shift has wrong dimension");
        auto np = newton_polyhedron(b);
        Rational d0 = critical_exponent(np);
        double dv = to_double(d0);
        d_ = std::make_shared<const detail::KernelData>(
            detail::KernelData{std::move(b), std::move(np), d0, dv, std::move(opt)});
    }

    int nvars() const { return d_->b.nvars(); }
    const MultiPoly& poly() const { return d_->b; }
    const NewtonPolyhedron& polyhedron() const { return d_->np; }
    const Rational& delta0() const { return d_->delta0; }
    double delta0_value() const { return d_->delta0_value; }
    double radius() const { return d_->opt.radius; }
    const KernelOptions& options() const { return d_->opt; }
    DyadicProfile profile() const { return d_->opt.profile; }
    double span() const { return window_span(d_->opt.profile); }

    /// Odd in every variable (exactly, bit for bit) unless a cutoff shift or Unsigned mode is set.
    bool odd_symmetric() const
    {
        return d_->opt.sign != SignMode::Unsigned && d_->opt.cutoff_shift.empty()
            && (d_->opt.sign == SignMode::Symmetrized || even_in_each_variable());
    }

    /// Smallest j with 2^-j < R.
    int j_min() const
    {
        int j = static_cast<int>(std::floor(-std::log2(d_->opt.radius))) + 1;
        while (std::ldexp(1.0, -(j - 1)) < d_->opt.radius)
            --j;
        while (!(std::ldexp(1.0, -j) < d_->opt.radius))
            ++j;
        return j;
    }

    double cutoff(std::span<const double> y) const
    {
        double s = 0;
        const auto& c = d_->opt.cutoff_shift;
        for (std::size_t i = 0; i < y.size(); ++i) {
            const double t = c.empty() ? y[i] : y[i] - c[i];
            s += t * t;
        }
        return plateau_cutoff(s, d_->opt.radius);
    }

    /// |b| at the point the kernel reads it from (|y| in Symmetrized mode).
    double b_abs(std::span<const double> y) const
    {
        if (d_->opt.sign == SignMode::Symmetrized) {
            std::array<double, detail::max_kernel_nvars> a{};
            for (std::size_t i = 0; i < y.size(); ++i)
                a[i] = std::abs(y[i]);
            return std::abs(d_->b(std::span<const double>(a.data(), y.size())));
        }
        return std::abs(d_->b(y));
    }

    double operator()(std::span<const double> y) const
    {
        if (static_cast<int>(y.size()) != nvars())
            throw std::invalid_argument("kernel evaluation point has wrong dimension");
        double sign = 1.0;
        for (double v : y) {
            if (v == 0.0)
                return 0.0;
            if (d_->opt.sign != SignMode::Unsigned && v < 0.0)
                sign = -sign;
        }
        const double phi = cutoff(y);
        if (phi == 0.0)
            return 0.0;
        const double bv = b_abs(y);
        if (bv == 0.0)
            return 0.0;
        const double p = d_->delta0_value == 1.0 ? 1.0 / bv : std::pow(bv, -d_->delta0_value);
        return sign * phi * p;
    }

    double operator()(std::initializer_list<double> y) const
    {
        return (*this)(std::span<const double>(y.begin(), y.size()));
    }

private:
    bool even_in_each_variable() const
    {
        for (const auto& [e, c] : d_->b.terms())
            for (int v : e)
                if (v % 2)
                    return false;
        return true;
    }

    std::shared_ptr<const detail::KernelData> d_;
};

inline Kernel example_kernel(const MultiPoly& b, double radius = 0.5, KernelOptions opt = {})
{
    opt.radius = radius;
    return Kernel(b, std::move(opt));
}

/// K(y) * prod_l window(j_l, |y_l|).
class KernelPiece {
public:
    KernelPiece(Kernel k, std::vector<int> j) : k_(std::move(k)), j_(std::move(j))
    {
        if (static_cast<int>(j_.size()) != k_.nvars())
            throw std::invalid_argument("dyadic index has wrong dimension");
        // the box meets the support ball only if its inner corner does
        const auto& c = k_.options().cutoff_shift;
        double s = 0;
        for (std::size_t l = 0; l < j_.size(); ++l) {
            double lo = std::ldexp(1.0, -j_[l]);
            double hi = k_.span() * lo;
            double t = 0.0;
            if (!c.empty()) {
                double ac = std::abs(c[l]);
                t = ac < lo ? lo - ac : (ac > hi ? ac - hi : 0.0);
            } else {
                t = lo;
            }
            s += t * t;
        }
        zero_ = !(s < k_.radius() * k_.radius());
    }

    const Kernel& kernel() const { return k_; }
    const std::vector<int>& j() const { return j_; }
    int nvars() const { return k_.nvars(); }
    bool is_zero() const { return zero_; }
    double span() const { return k_.span(); }
    double lower(int l) const { return std::ldexp(1.0, -j_[l]); }
    double upper(int l) const { return k_.span() * lower(l); }
    std::vector<double> breakpoints(int l) const { return window_breakpoints(k_.profile(), j_[l]); }

    double window(std::span<const double> y) const
    {
        double w = 1.0;
        for (std::size_t l = 0; l < j_.size() && w != 0.0; ++l)
            w *= dyadic_window(k_.profile(), j_[l], std::abs(y[l]));
        return w;
    }

    double operator()(std::span<const double> y) const
    {
        if (zero_)
            return 0.0;
        const double w = window(y);
        return w == 0.0 ? 0.0 : w * k_(y);
    }

    double operator()(std::initializer_list<double> y) const
    {
        return (*this)(std::span<const double>(y.begin(), y.size()));
    }

private:
    Kernel k_;
    std::vector<int> j_;
    bool zero_ = false;
};

inline KernelPiece dyadic_piece(const Kernel& k, std::vector<int> j) { return KernelPiece(k, std::move(j)); }

/// K_L: the sum of pieces with j_min <= j_l < L, in closed form.
class TruncatedKernel {
public:
    TruncatedKernel(Kernel k, int L) : k_(std::move(k)), L_(L) {}

    const Kernel& kernel() const { return k_; }
    int L() const { return L_; }

    double operator()(std::span<const double> y) const
    {
        double w = 1.0;
        const int lo = k_.j_min();
        for (std::size_t l = 0; l < y.size() && w != 0.0; ++l)
            w *= dyadic_window_sum(k_.profile(), lo, L_ - 1, std::abs(y[l]));
        return w == 0.0 ? 0.0 : w * k_(y);
    }

    double operator()(std::initializer_list<double> y) const
    {
        return (*this)(std::span<const double>(y.begin(), y.size()));
    }

    /// Nonzero pieces in lexicographic order of j.
    std::vector<KernelPiece> pieces() const
    {
        std::vector<KernelPiece> out;
        const int n = k_.nvars(), lo = k_.j_min();
        if (L_ <= lo)
            return out;
        std::vector<int> j(n, lo);
        while (true) {
            KernelPiece p(k_, j);
            if (!p.is_zero())
                out.push_back(std::move(p));
            int l = n - 1;
            while (l >= 0 && ++j[l] >= L_)
                j[l--] = lo;
            if (l < 0)
                break;
        }
        return out;
    }

private:
    Kernel k_;
    int L_;
};

namespace detail {

inline double binomial(int n, int k)
{
    double r = 1;
    for (int i = 1; i <= k; ++i)
        r = r * (n - k + i) / i;
    return r;
}

// Tensor central difference d^alpha f(y) with per-axis steps h.
template <class F>
double central_difference(const F& f, std::span<const double> y, const Exponent& alpha, std::span<const double> h)
{
    const int n = static_cast<int>(y.size());
    std::vector<double> z(y.begin(), y.end());
    std::vector<int> idx(n, 0);
    double total = 0;
    while (true) {
        double coef = 1.0;
        for (int l = 0; l < n; ++l) {
            const int k = alpha[l];
            z[l] = y[l] + (0.5 * k - idx[l]) * h[l];
            coef *= ((idx[l] % 2) ? -1.0 : 1.0) * binomial(k, idx[l]);
        }
        total += coef * f(std::span<const double>(z));
        int l = 0;
        while (l < n && ++idx[l] > alpha[l])
            idx[l++] = 0;
        if (l == n)
            break;
    }
    for (int l = 0; l < n; ++l)
        total /= std::pow(h[l], alpha[l]);
    return total;
}

inline std::vector<Exponent> multiindices_up_to(int n, int max_order)
{
    std::vector<Exponent> out;
    Exponent a(n, 0);
    std::function<void(int, int)> rec = [&](int i, int left) {
        if (i == n) {
            out.push_back(a);
            return;
        }
        for (int v = 0; v <= left; ++v) {
            a[i] = v;
            rec(i + 1, left - v);
        }
        a[i] = 0;
    };
    rec(0, max_order);
    return out;
}

} // namespace detail

struct PieceBounds {
    double C_23 = 0;  // sup |piece| |b|^delta0
    double C_24 = 0;  // sup |d_l piece| |y_l| |b|^(1+delta0) / b*
    double C_213 = 0; // sup over |alpha| <= n+1 of |d^alpha piece| prod |y_l|^alpha_l (b*)^delta0
    std::vector<std::pair<Exponent, double>> per_alpha;
    long long points = 0;
    long long skipped = 0;
};

/**
 * Grid sup of the piece bounds. Grid points are geometric in each |y_l|,
 * grid_density per factor of two; derivative steps are 2^-j_l / 64.
 */
inline PieceBounds verify_piece_bounds(const KernelPiece& piece, int grid_density = 32)
{
    if (grid_density < 32)
        throw std::invalid_argument("grid density must be at least 32 points per dyadic length");
    const int n = piece.nvars();
    const Kernel& K = piece.kernel();
    const double d0 = K.delta0_value();
    PieceBounds out;
    auto alphas = detail::multiindices_up_to(n, n + 1);
    std::vector<double> sup(alphas.size(), 0.0);
    if (piece.is_zero()) {
        for (std::size_t a = 0; a < alphas.size(); ++a)
            out.per_alpha.emplace_back(alphas[a], 0.0);
        return out;
    }

    const int per_axis = static_cast<int>(std::lround(std::log2(piece.span()) * grid_density));
    std::vector<double> h(n);
    for (int l = 0; l < n; ++l)
        h[l] = piece.lower(l) / 64.0;
    // reflections only flip signs of derivatives when the kernel is odd
    const int orthants = K.odd_symmetric() ? 1 : (1 << n);
    auto f = [&](std::span<const double> z) { return piece(z); };

    std::vector<int> idx(n, 0);
    std::vector<double> y(n);
    for (int o = 0; o < orthants; ++o) {
        std::fill(idx.begin(), idx.end(), 0);
        while (true) {
            for (int l = 0; l < n; ++l) {
                y[l] = piece.lower(l) * std::exp2((idx[l] + 0.5) / grid_density);
                if (o & (1 << l))
                    y[l] = -y[l];
            }
            const double bv = std::abs(K.poly()(std::span<const double>(y)));
            const double bs = b_star(K.polyhedron(), y);
            if (bv > 0.0 && bs > 0.0 && std::isfinite(bv)) {
                ++out.points;
                const double v = std::abs(piece(std::span<const double>(y)));
                out.C_23 = std::max(out.C_23, v * std::pow(bv, d0));
                const double bs_d0 = std::pow(bs, d0);
                for (std::size_t a = 0; a < alphas.size(); ++a) {
                    int order = 0;
                    for (int v2 : alphas[a])
                        order += v2;
                    double der = order == 0 ? v : std::abs(detail::central_difference(f, y, alphas[a], h));
                    double scale = bs_d0;
                    for (int l = 0; l < n; ++l)
                        scale *= std::pow(std::abs(y[l]), alphas[a][l]);
                    sup[a] = std::max(sup[a], der * scale);
                    if (order == 1) {
                        int l = static_cast<int>(std::find(alphas[a].begin(), alphas[a].end(), 1) - alphas[a].begin());
                        out.C_24 = std::max(out.C_24, der * std::abs(y[l]) * std::pow(bv, 1.0 + d0) / bs);
                    }
                }
            } else {
                ++out.skipped;
            }
            int l = 0;
            while (l < n && ++idx[l] >= per_axis)
                idx[l++] = 0;
            if (l == n)
                break;
        }
    }
    for (std::size_t a = 0; a < alphas.size(); ++a) {
        out.per_alpha.emplace_back(alphas[a], sup[a]);
        out.C_213 = std::max(out.C_213, sup[a]);
    }
    return out;
}

namespace detail {

// Composite rule on the positive part of the piece support along axis l.
inline QuadRule piece_axis_rule(const KernelPiece& p, int l, int quad_order, int panels)
{
    return composite_rule(p.breakpoints(l), panels, quad_order);
}

} // namespace detail

/**
 * Max over a set of transverse points of |integral of the piece along one
 * axis (1-based)|. Each node is paired with its mirror image before summing.
 */
inline double verify_cancellation(const KernelPiece& piece, int axis, int quad_order = 16, int transverse = 5)
{
    if (quad_order < 16)
        throw std::invalid_argument("cancellation check needs quadrature order >= 16");
    const int n = piece.nvars();
    if (axis < 1 || axis > n)
        throw std::invalid_argument("axis out of range");
    if (piece.is_zero())
        return 0.0;
    const int ax = axis - 1;
    const QuadRule rule = detail::piece_axis_rule(piece, ax, quad_order, 4);

    std::vector<int> idx(n, 0);
    std::vector<double> y(n);
    double worst = 0;
    const int sides = 2 * transverse;
    while (true) {
        for (int l = 0; l < n; ++l) {
            if (l == ax)
                continue;
            const int k = idx[l] % transverse;
            y[l] = piece.lower(l) * std::pow(piece.span(), (k + 0.5) / transverse);
            if (idx[l] >= transverse)
                y[l] = -y[l];
        }
        double s = 0;
        for (std::size_t q = 0; q < rule.size(); ++q) {
            y[ax] = rule.nodes[q];
            const double fp = piece(std::span<const double>(y));
            y[ax] = -rule.nodes[q];
            const double fm = piece(std::span<const double>(y));
            s += rule.weights[q] * (fp + fm);
        }
        worst = std::max(worst, std::abs(s));
        int l = 0;
        while (l < n && (l == ax || ++idx[l] >= sides)) {
            if (l != ax)
                idx[l] = 0;
            ++l;
        }
        if (l == n)
            break;
    }
    return worst;
}

/**
 * Delta phi(y) = sum over S of (-1)^(n-|S|) phi(y_S), evaluated as iterated
 * differences y_l -> 0 taken along `order` (0-based axes, default 0..n-1).
 */
inline double mixed_difference(const TestFunction& phi, std::span<const double> y, std::vector<int> order = {})
{
    const int n = static_cast<int>(y.size());
    if (order.empty())
        for (int l = 0; l < n; ++l)
            order.push_back(l);
    if (static_cast<int>(order.size()) != n)
        throw std::invalid_argument("peeling order must list every axis once");
    {
        auto s = order;
        std::sort(s.begin(), s.end());
        for (int l = 0; l < n; ++l)
            if (s[l] != l)
                throw std::invalid_argument("peeling order must list every axis once");
    }
    std::vector<double> z(y.begin(), y.end());
    std::function<double(int)> rec = [&](int k) -> double {
        if (k == 0)
            return phi(std::span<const double>(z));
        const int l = order[k - 1];
        const double keep = z[l];
        const double a = rec(k - 1);
        z[l] = 0.0;
        const double b = rec(k - 1);
        z[l] = keep;
        return a - b;
    };
    return rec(n);
}

struct PairingOptions {
    int quad_order = 16;
    int panels = 1;
    int max_shell = 80;  // largest max_l j_l before giving up
    double tol = 1e-13;  // stop once two consecutive shells contribute below tol * (sum of |terms|)
    std::vector<int> peeling_order;
};

struct PairingResult {
    double value = 0;
    double abs_sum = 0; // sum of |integral of piece * Delta phi|
    std::vector<double> shell_values;     // contribution of each shell max_l j_l = M
    std::vector<double> shell_abs_values; // same, in absolute values
    long long pieces = 0;
    bool converged = false;
};

class PairingDivergence : public std::runtime_error {
public:
    explicit PairingDivergence(PairingResult partial)
        : std::runtime_error("pairing did not converge within the shell budget"), partial_(std::move(partial))
    {
    }
    const PairingResult& partial() const { return partial_; }

private:
    PairingResult partial_;
};

/// Integral of piece * g over the piece support by tensor Gauss-Legendre on all sign orthants.
template <class G>
double integrate_piece(const KernelPiece& piece, const G& g, int quad_order, int panels)
{
    const int n = piece.nvars();
    if (piece.is_zero())
        return 0.0;
    std::vector<QuadRule> rules;
    for (int l = 0; l < n; ++l) {
        QuadRule r = detail::piece_axis_rule(piece, l, quad_order, panels);
        const std::size_t m = r.size();
        for (std::size_t q = 0; q < m; ++q) {
            r.nodes.push_back(-r.nodes[q]);
            r.weights.push_back(r.weights[q]);
        }
        rules.push_back(std::move(r));
    }
    std::vector<std::size_t> idx(n, 0);
    std::vector<double> y(n);
    double total = 0;
    while (true) {
        double w = 1.0;
        for (int l = 0; l < n; ++l) {
            y[l] = rules[l].nodes[idx[l]];
            w *= rules[l].weights[idx[l]];
        }
        const double pv = piece(std::span<const double>(y));
        if (pv != 0.0)
            total += w * pv * g(std::span<const double>(y));
        int l = 0;
        while (l < n && ++idx[l] >= rules[l].size())
            idx[l++] = 0;
        if (l == n)
            break;
    }
    return total;
}

namespace detail {

// Integral of piece * Delta phi on the tensor grid of integrate_piece. phi at
// points with zeroed coordinates is tabulated once per subset of axes.
inline double integrate_piece_mixed(const KernelPiece& piece, const TestFunction& phi, const std::vector<int>& order,
                                    int quad_order, int panels)
{
    const int n = piece.nvars();
    if (piece.is_zero())
        return 0.0;
    std::vector<QuadRule> rules;
    std::size_t total_pts = 1;
    for (int l = 0; l < n; ++l) {
        QuadRule r = piece_axis_rule(piece, l, quad_order, panels);
        const std::size_t m = r.size();
        for (std::size_t q = 0; q < m; ++q) {
            r.nodes.push_back(-r.nodes[q]);
            r.weights.push_back(r.weights[q]);
        }
        total_pts *= r.size();
        rules.push_back(std::move(r));
    }
    std::vector<int> peel = order;
    if (peel.empty())
        for (int l = 0; l < n; ++l)
            peel.push_back(l);

    // flat index with axis 0 fastest
    std::vector<std::size_t> stride(n, 1);
    for (int l = 1; l < n; ++l)
        stride[l] = stride[l - 1] * rules[l - 1].size();
    const int subsets = 1 << n;
    std::vector<std::vector<double>> G(subsets, std::vector<double>(total_pts));
    std::vector<double> z(n);
    for (int S = 0; S < subsets; ++S) {
        // evaluate on the sub-grid of axes in S, then broadcast
        std::vector<std::size_t> idx(n, 0);
        while (true) {
            std::size_t flat = 0;
            for (int l = 0; l < n; ++l) {
                z[l] = (S >> l & 1) ? rules[l].nodes[idx[l]] : 0.0;
                flat += idx[l] * stride[l];
            }
            const double v = phi(std::span<const double>(z));
            // broadcast over the axes not in S
            std::vector<std::size_t> jdx(n, 0);
            while (true) {
                std::size_t f = flat;
                for (int l = 0; l < n; ++l)
                    if (!(S >> l & 1))
                        f += jdx[l] * stride[l];
                G[S][f] = v;
                int l = 0;
                while (l < n && ((S >> l & 1) || ++jdx[l] >= rules[l].size())) {
                    if (!(S >> l & 1))
                        jdx[l] = 0;
                    ++l;
                }
                if (l == n)
                    break;
            }
            int l = 0;
            while (l < n && (!(S >> l & 1) || ++idx[l] >= rules[l].size())) {
                if (S >> l & 1)
                    idx[l] = 0;
                ++l;
            }
            if (l == n)
                break;
        }
    }
    for (int l : peel)
        for (int S = 0; S < subsets; ++S)
            if (S >> l & 1)
                for (std::size_t f = 0; f < total_pts; ++f)
                    G[S][f] -= G[S & ~(1 << l)][f];
    const auto& dphi = G[subsets - 1];

    std::vector<std::size_t> idx(n, 0);
    std::vector<double> y(n);
    double total = 0;
    for (std::size_t f = 0; f < total_pts; ++f) {
        double w = 1.0;
        for (int l = 0; l < n; ++l) {
            y[l] = rules[l].nodes[idx[l]];
            w *= rules[l].weights[idx[l]];
        }
        const double pv = piece(std::span<const double>(y));
        if (pv != 0.0)
            total += w * pv * dphi[f];
        int l = 0;
        while (l < n && ++idx[l] >= rules[l].size())
            idx[l++] = 0;
    }
    return total;
}

} // namespace detail

/**
 * <K, phi> as the sum over pieces of the integral of piece * Delta phi,
 * summed shell by shell in increasing max_l j_l and lexicographically inside
 * a shell. Throws PairingDivergence when the shells do not settle.
 */
inline PairingResult pair_with_test_function(const Kernel& K, const TestFunction& phi, const PairingOptions& opt = {})
{
    const int n = K.nvars();
    const int lo = K.j_min();
    PairingResult res;
    if (!opt.peeling_order.empty()) {
        std::vector<double> probe(n, 0.0);
        mixed_difference([](std::span<const double>) { return 0.0; }, probe, opt.peeling_order);
    }
    int quiet = 0;
    for (int M = lo; M <= opt.max_shell; ++M) {
        double shell = 0, shell_abs = 0;
        std::vector<int> j(n, lo);
        while (true) {
            if (*std::max_element(j.begin(), j.end()) == M) {
                KernelPiece p(K, j);
                if (!p.is_zero()) {
                    double v = detail::integrate_piece_mixed(p, phi, opt.peeling_order, opt.quad_order, opt.panels);
                    shell += v;
                    shell_abs += std::abs(v);
                    ++res.pieces;
                }
            }
            int l = n - 1;
            while (l >= 0 && ++j[l] > M)
                j[l--] = lo;
            if (l < 0)
                break;
        }
        res.value += shell;
        res.abs_sum += shell_abs;
        res.shell_values.push_back(shell);
        res.shell_abs_values.push_back(shell_abs);
        if (shell_abs <= opt.tol * std::max(res.abs_sum, 1e-300))
            ++quiet;
        else
            quiet = 0;
        if (quiet >= 2) {
            res.converged = true;
            return res;
        }
    }
    throw PairingDivergence(std::move(res));
}

/// Integral of K_L * phi over the cube |y_l| <= span * 2^-j_min on dyadic panels.
inline double truncated_integral(const TruncatedKernel& KL, const TestFunction& phi, int quad_order = 16,
                                 int panels = 2)
{
    const Kernel& K = KL.kernel();
    const int n = K.nvars(), lo = K.j_min();
    if (KL.L() <= lo)
        return 0.0;
    std::vector<double> breaks;
    breaks.push_back(std::ldexp(1.0, -(KL.L() - 1)));
    for (int k = KL.L() - 2; k >= lo - 2; --k)
        breaks.push_back(std::ldexp(1.0, -k));
    QuadRule r = composite_rule(breaks, panels, quad_order);
    const std::size_t m = r.size();
    for (std::size_t q = 0; q < m; ++q) {
        r.nodes.push_back(-r.nodes[q]);
        r.weights.push_back(r.weights[q]);
    }
    std::vector<std::size_t> idx(n, 0);
    std::vector<double> y(n);
    double total = 0;
    while (true) {
        double w = 1.0;
        for (int l = 0; l < n; ++l) {
            y[l] = r.nodes[idx[l]];
            w *= r.weights[idx[l]];
        }
        const double kv = KL(std::span<const double>(y));
        if (kv != 0.0)
            total += w * kv * phi(std::span<const double>(y));
        int l = 0;
        while (l < n && ++idx[l] >= r.size())
            idx[l++] = 0;
        if (l == n)
            break;
    }
    return total;
}

} // namespace nk

#endif
