#ifndef NK_FOURIER_HPP
#define NK_FOURIER_HPP

#include "nk/kernel.hpp"
#include "nk/quadrature.hpp"
#include "nk/random.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

namespace nk {

using cplx = std::complex<double>;

struct FourierOptions {
    int quad_order = 16;
    double points_per_period = 8.0;
    int max_level = 10; // at most 2^max_level panels per segment
};

/**
 * Fourier transform of one piece, integral of piece(y) e^(-i xi.y) dy, with
 * optional moment y^alpha. Panels per segment are 2^k with k the least level
 * giving points_per_period nodes per period of e^(-i xi_l y_l); piece values
 * on each tensor grid are cached. Odd pieces use the positive orthant only,
 * with sine and cosine factors.
 */
class PieceTransformer {
public:
    explicit PieceTransformer(KernelPiece piece, FourierOptions opt = {})
        : piece_(std::move(piece)), opt_(opt), odd_(piece_.kernel().odd_symmetric())
    {
        if (opt_.quad_order < 2)
            throw std::invalid_argument("quadrature order too small");
    }

    const KernelPiece& piece() const { return piece_; }

    /// Panel level needed on axis l (0-based) for frequency xi_l.
    int level_for(int l, double xi) const
    {
        double seg = 0;
        auto br = piece_.breakpoints(l);
        for (std::size_t s = 0; s + 1 < br.size(); ++s)
            seg = std::max(seg, br[s + 1] - br[s]);
        const double need = opt_.points_per_period * seg * std::abs(xi) / (2 * std::numbers::pi);
        int k = 0;
        while ((1 << k) * opt_.quad_order < need) {
            if (++k > opt_.max_level)
                throw std::runtime_error("frequency too high for the quadrature budget; raise the quadrature order");
        }
        return k;
    }

    cplx operator()(std::span<const double> xi, const Exponent& alpha = {})
    {
        const int n = piece_.nvars();
        if (static_cast<int>(xi.size()) != n)
            throw std::invalid_argument("frequency has wrong dimension");
        if (!alpha.empty() && static_cast<int>(alpha.size()) != n)
            throw std::invalid_argument("moment has wrong dimension");
        if (piece_.is_zero())
            return 0.0;
        std::vector<int> lv(n);
        for (int l = 0; l < n; ++l)
            lv[l] = level_for(l, xi[l]);
        const Grid& g = grid(lv);
        int order = 0;
        for (int a : alpha)
            order += a;
        cplx pre = std::pow(cplx(0, -1), order);

        if (odd_) {
            std::vector<std::vector<double>> coef(n);
            for (int l = 0; l < n; ++l) {
                const int a = alpha.empty() ? 0 : alpha[l];
                const auto& r = g.rules[l];
                coef[l].resize(r.size());
                for (std::size_t k = 0; k < r.size(); ++k) {
                    const double y = r.nodes[k];
                    const double t = xi[l] * y;
                    coef[l][k] = r.weights[k] * std::pow(y, a) * ((a % 2) ? std::cos(t) : std::sin(t));
                }
                // odd factor: -2i sin; even factor (odd moment): 2 cos
                pre *= (a % 2) ? cplx(2, 0) : cplx(0, -2);
            }
            return pre * contract<double>(g.values, coef);
        }
        std::vector<std::vector<cplx>> coef(n);
        for (int l = 0; l < n; ++l) {
            const int a = alpha.empty() ? 0 : alpha[l];
            const auto& r = g.rules[l];
            coef[l].resize(r.size());
            for (std::size_t k = 0; k < r.size(); ++k) {
                const double y = r.nodes[k];
                coef[l][k] = r.weights[k] * std::pow(y, a) * std::polar(1.0, -xi[l] * y);
            }
        }
        return pre * contract<cplx>(g.values, coef);
    }

    cplx operator()(std::initializer_list<double> xi, const Exponent& alpha = {})
    {
        return (*this)(std::span<const double>(xi.begin(), xi.size()), alpha);
    }

    void clear_cache() { cache_.clear(); }

private:
    struct Grid {
        std::vector<QuadRule> rules;
        std::vector<double> values; // axis 0 fastest
    };

    const Grid& grid(const std::vector<int>& levels)
    {
        auto it = cache_.find(levels);
        if (it != cache_.end())
            return it->second;
        const int n = piece_.nvars();
        Grid g;
        std::size_t total = 1;
        for (int l = 0; l < n; ++l) {
            QuadRule r = composite_rule(piece_.breakpoints(l), 1 << levels[l], opt_.quad_order);
            if (!odd_) {
                const std::size_t m = r.size();
                for (std::size_t q = 0; q < m; ++q) {
                    r.nodes.push_back(-r.nodes[q]);
                    r.weights.push_back(r.weights[q]);
                }
            }
            total *= r.size();
            g.rules.push_back(std::move(r));
        }
        g.values.resize(total);
        std::vector<std::size_t> idx(n, 0);
        std::vector<double> y(n);
        for (std::size_t f = 0; f < total; ++f) {
            for (int l = 0; l < n; ++l)
                y[l] = g.rules[l].nodes[idx[l]];
            g.values[f] = piece_(std::span<const double>(y));
            int l = 0;
            while (l < n && ++idx[l] >= g.rules[l].size())
                idx[l++] = 0;
        }
        return cache_.emplace(levels, std::move(g)).first->second;
    }

    // Contracts the tensor against one coefficient vector per axis, slowest axis first.
    template <class T>
    static T contract(const std::vector<double>& values, const std::vector<std::vector<T>>& coef)
    {
        const int n = static_cast<int>(coef.size());
        std::vector<T> cur(values.begin(), values.end());
        std::size_t size = cur.size();
        for (int l = n - 1; l >= 0; --l) {
            const std::size_t N = coef[l].size();
            const std::size_t inner = size / N;
            std::vector<T> next(inner, T(0));
            for (std::size_t k = 0; k < N; ++k) {
                const T c = coef[l][k];
                const T* src = cur.data() + k * inner;
                for (std::size_t i = 0; i < inner; ++i)
                    next[i] += c * src[i];
            }
            cur.swap(next);
            size = inner;
        }
        return cur[0];
    }

    KernelPiece piece_;
    FourierOptions opt_;
    bool odd_;
    std::map<std::vector<int>, Grid> cache_;
};

inline cplx piece_fourier_transform(const KernelPiece& piece, std::span<const double> xi, int quad_order = 16)
{
    FourierOptions o;
    o.quad_order = quad_order;
    PieceTransformer t(piece, o);
    return t(xi);
}

struct DecayOptions {
    double u_lo = 1e-3;
    double u_hi = 1e3;
    int per_decade = 6;
    int transverse_per_decade = 1; // u grid on the other axes, over [u_lo, 10]
    double noise_floor = 1e-10;    // relative to the largest |K^|
    FourierOptions fourier;
};

struct AxisDecay {
    std::vector<double> u;        // 2^-j_l |xi_l| on the high side, u >= 1
    std::vector<double> envelope; // max |K^| over the transverse grid and over [u, 2u]
    double C_small = 0;
    double rho_fit = 0;
};

struct FourierDecay {
    double C_small = 0; // max over axes
    double rho_fit = 0; // min over axes
    std::vector<AxisDecay> axes;
};

inline std::vector<double> log_grid(double lo, double hi, int per_decade)
{
    std::vector<double> g;
    const int count = static_cast<int>(std::lround(std::log10(hi / lo) * per_decade));
    for (int i = 0; i <= count; ++i)
        g.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / count));
    return g;
}

namespace detail {

inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y)
{
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i)
        mx += std::log(x[i]), my += std::log(y[i]);
    mx /= x.size();
    my /= y.size();
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (std::log(x[i]) - mx) * (std::log(y[i]) - my);
        sxx += (std::log(x[i]) - mx) * (std::log(x[i]) - mx);
    }
    return sxx > 0 ? sxy / sxx : 0.0;
}

} // namespace detail

/**
 * Per axis l: C_small = sup |K^|/u_l over u_l <= 1, and rho_fit = minus the
 * log-log slope of the envelope of |K^| over u_l in [1, u_hi], with u_l =
 * 2^-j_l |xi_l|. Other axes range over a coarse log grid; points below the
 * noise floor are left out of the fit.
 */
inline FourierDecay verify_fourier_decay(const KernelPiece& piece, const DecayOptions& opt = {})
{
    const int n = piece.nvars();
    PieceTransformer T(piece, opt.fourier);
    const auto ugrid = log_grid(opt.u_lo, opt.u_hi, opt.per_decade);
    const auto tgrid = n > 1 ? log_grid(opt.u_lo, 10.0, opt.transverse_per_decade) : std::vector<double>{1.0};
    FourierDecay out;
    out.rho_fit = std::numeric_limits<double>::infinity();
    std::vector<double> xi(n);
    for (int l = 0; l < n; ++l) {
        AxisDecay ad;
        std::vector<double> mag(ugrid.size(), 0.0);
        for (std::size_t a = 0; a < ugrid.size(); ++a) {
            // all transverse combinations
            std::vector<std::size_t> idx(n, 0);
            while (true) {
                for (int m = 0; m < n; ++m) {
                    const double u = m == l ? ugrid[a] : tgrid[idx[m]];
                    xi[m] = u * std::ldexp(1.0, piece.j()[m]);
                }
                const double v = std::abs(T(xi));
                mag[a] = std::max(mag[a], v);
                if (ugrid[a] <= 1.0)
                    ad.C_small = std::max(ad.C_small, v / ugrid[a]);
                int m = 0;
                while (m < n && (m == l || ++idx[m] >= tgrid.size())) {
                    if (m != l)
                        idx[m] = 0;
                    ++m;
                }
                if (m == n)
                    break;
            }
            T.clear_cache();
        }
        const double top = *std::max_element(mag.begin(), mag.end());
        std::vector<double> fu, fv;
        for (std::size_t a = 0; a < ugrid.size(); ++a) {
            if (ugrid[a] < 1.0 || ugrid[a] * 2 > opt.u_hi * (1 + 1e-12))
                continue;
            double env = 0;
            for (std::size_t b = a; b < ugrid.size() && ugrid[b] <= 2 * ugrid[a] * (1 + 1e-12); ++b)
                env = std::max(env, mag[b]);
            ad.u.push_back(ugrid[a]);
            ad.envelope.push_back(env);
            if (env > opt.noise_floor * top) {
                fu.push_back(ugrid[a]);
                fv.push_back(env);
            }
        }
        ad.rho_fit = fu.size() >= 2 ? -detail::loglog_slope(fu, fv) : 0.0;
        out.C_small = std::max(out.C_small, ad.C_small);
        out.rho_fit = std::min(out.rho_fit, ad.rho_fit);
        out.axes.push_back(std::move(ad));
    }
    return out;
}

struct MultiplierOptions {
    int per_octave = 4;
    int fixed_directions = 8;
    int random_directions = 8;
    std::uint64_t seed = 1;
    double skip_u = 64; // pieces with some 2^-j_l |xi_l| above this are not summed (smooth profile only)
    FourierOptions fourier;
};

/// |xi| in [1, 2^(log2_max)] log-spaced along fixed and seeded random directions.
inline std::vector<std::vector<double>> multiplier_grid(int n, int log2_max, const MultiplierOptions& opt)
{
    std::vector<std::vector<double>> dirs;
    if (n == 1) {
        dirs.push_back({1.0});
    } else {
        for (int k = 0; k < opt.fixed_directions; ++k) {
            std::vector<double> d(n, 0.0);
            if (n == 2) {
                const double a = (k + 0.5) * (std::numbers::pi / 2) / opt.fixed_directions;
                d[0] = std::cos(a);
                d[1] = std::sin(a);
            } else {
                for (int l = 0; l < n; ++l)
                    d[l] = 1.0 + 0.5 * std::sin(1.7 * (k + 1) * (l + 1));
            }
            dirs.push_back(d);
        }
        Rng rng(opt.seed, 77);
        for (int k = 0; k < opt.random_directions; ++k) {
            std::vector<double> d(n);
            for (auto& v : d) {
                // Box-Muller
                double u1 = rng.uniform(), u2 = rng.uniform();
                v = std::sqrt(-2 * std::log(1 - u1)) * std::cos(2 * std::numbers::pi * u2);
            }
            dirs.push_back(d);
        }
    }
    std::vector<std::vector<double>> out;
    const int count = log2_max * opt.per_octave;
    for (auto& d : dirs) {
        double norm = 0;
        for (double v : d)
            norm += v * v;
        norm = std::sqrt(norm);
        for (int i = 0; i <= count; ++i) {
            const double r = std::exp2(static_cast<double>(i) / opt.per_octave);
            std::vector<double> xi(n);
            for (int l = 0; l < n; ++l)
                xi[l] = r * d[l] / norm;
            out.push_back(std::move(xi));
        }
    }
    return out;
}

struct SymbolSups {
    std::vector<Exponent> alphas;
    std::vector<int> Ls;
    std::vector<std::vector<double>> sup; // [alpha][L] sup over the grid of |xi^alpha d^alpha K_L^|
    std::vector<cplx> at_zero;            // K_L^(0) per L
    std::size_t grid_points = 0;
    long long piece_evaluations = 0;
    long long skipped = 0;
};

/**
 * For each alpha and L: sup over the grid of |xi^alpha d^alpha K_L^(xi)|,
 * with d^alpha K_L^ the transform of (-iy)^alpha K_L summed piece by piece.
 */
inline SymbolSups marcinkiewicz_check(const Kernel& K, std::vector<int> Ls, const std::vector<Exponent>& alphas,
                                      const std::vector<std::vector<double>>& grid, const MultiplierOptions& opt = {})
{
    if (Ls.empty() || alphas.empty())
        throw std::invalid_argument("need at least one L and one alpha");
    std::sort(Ls.begin(), Ls.end());
    const int n = K.nvars();
    for (const auto& a : alphas)
        if (static_cast<int>(a.size()) != n)
            throw std::invalid_argument("multi-index has wrong dimension");
    SymbolSups out;
    out.alphas = alphas;
    out.Ls = Ls;
    out.grid_points = grid.size();
    const std::size_t NA = alphas.size(), NL = Ls.size(), NX = grid.size();
    // acc[(a * NX + x) * NL + L]
    std::vector<cplx> acc(NA * NX * NL, 0.0);
    const bool skip = K.profile() == DyadicProfile::Smooth;
    TruncatedKernel KL(K, Ls.back());
    for (const auto& piece : KL.pieces()) {
        const int jmax = *std::max_element(piece.j().begin(), piece.j().end());
        std::size_t first_L = 0;
        while (first_L < NL && Ls[first_L] <= jmax)
            ++first_L;
        if (first_L == NL)
            continue;
        PieceTransformer T(piece, opt.fourier);
        for (std::size_t x = 0; x < NX; ++x) {
            bool far = false;
            for (int l = 0; l < n && skip; ++l)
                far = far || std::ldexp(std::abs(grid[x][l]), -piece.j()[l]) > opt.skip_u;
            if (far) {
                ++out.skipped;
                continue;
            }
            for (std::size_t a = 0; a < NA; ++a) {
                const cplx v = T(grid[x], alphas[a]);
                ++out.piece_evaluations;
                for (std::size_t L = first_L; L < NL; ++L)
                    acc[(a * NX + x) * NL + L] += v;
            }
        }
    }
    out.sup.assign(NA, std::vector<double>(NL, 0.0));
    for (std::size_t a = 0; a < NA; ++a)
        for (std::size_t x = 0; x < NX; ++x) {
            double mono = 1.0;
            for (int l = 0; l < n; ++l)
                mono *= std::pow(grid[x][l], alphas[a][l]);
            for (std::size_t L = 0; L < NL; ++L)
                out.sup[a][L] = std::max(out.sup[a][L], std::abs(mono * acc[(a * NX + x) * NL + L]));
        }
    // the zero frequency, summed the same way
    std::vector<double> zero(n, 0.0);
    out.at_zero.assign(NL, 0.0);
    for (const auto& piece : KL.pieces()) {
        const int jmax = *std::max_element(piece.j().begin(), piece.j().end());
        PieceTransformer T(piece, opt.fourier);
        const cplx v = T(zero);
        for (std::size_t L = 0; L < NL; ++L)
            if (Ls[L] > jmax)
                out.at_zero[L] += v;
    }
    return out;
}

struct MultiplierSup {
    std::vector<int> Ls;
    std::vector<double> sup;
    std::vector<cplx> at_zero;
    std::size_t grid_points = 0;
};

/// sup over the grid of |K_L^(xi)| for each L; the grid reaches |xi| = 2^(L_max + 2).
inline MultiplierSup multiplier_sup_bound(const Kernel& K, const std::vector<int>& Ls, const MultiplierOptions& opt = {})
{
    if (Ls.empty())
        throw std::invalid_argument("need at least one L");
    const int lmax = *std::max_element(Ls.begin(), Ls.end());
    auto grid = multiplier_grid(K.nvars(), lmax + 2, opt);
    auto s = marcinkiewicz_check(K, Ls, {Exponent(K.nvars(), 0)}, grid, opt);
    MultiplierSup out;
    out.Ls = s.Ls;
    out.sup = s.sup[0];
    out.at_zero = s.at_zero;
    out.grid_points = s.grid_points;
    return out;
}

} // namespace nk

#endif
