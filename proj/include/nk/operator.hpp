#ifndef NK_OPERATOR_HPP
#define NK_OPERATOR_HPP

#include "nk/fourier.hpp"
#include "nk/kernel.hpp"

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <functional>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace nk {

/// Uniform grid on the torus [-period/2, period/2)^n, last axis fastest.
struct PeriodicGrid {
    int nvars = 2;
    int points = 256; // per axis
    double period = 1.0;

    double step() const { return period / points; }
    double coord(int i) const { return -0.5 * period + i * step(); }
    std::size_t size() const
    {
        std::size_t s = 1;
        for (int l = 0; l < nvars; ++l)
            s *= static_cast<std::size_t>(points);
        return s;
    }
};

struct GridFunction {
    PeriodicGrid grid;
    std::vector<double> values;
};

inline GridFunction sample(const PeriodicGrid& g, const std::function<double(std::span<const double>)>& f)
{
    if (g.nvars < 1 || g.points < 2 || g.period <= 0)
        throw std::invalid_argument("bad grid");
    GridFunction out{g, std::vector<double>(g.size())};
    std::vector<int> idx(g.nvars, 0);
    std::vector<double> x(g.nvars);
    for (std::size_t p = 0; p < out.values.size(); ++p) {
        for (int l = 0; l < g.nvars; ++l)
            x[l] = g.coord(idx[l]);
        out.values[p] = f(x);
        for (int l = g.nvars - 1; l >= 0 && ++idx[l] == g.points; --l)
            idx[l] = 0;
    }
    return out;
}

/// exp(-|x|^2 / (2 sigma^2)) on the grid.
inline GridFunction gaussian(const PeriodicGrid& g, double sigma)
{
    return sample(g, [sigma](std::span<const double> x) {
        double s = 0;
        for (double v : x)
            s += v * v;
        return std::exp(-s / (2 * sigma * sigma));
    });
}

inline double l2_norm(const GridFunction& f)
{
    double s = 0;
    for (double v : f.values)
        s += v * v;
    return std::sqrt(s * std::pow(f.grid.step(), f.grid.nvars));
}

namespace detail {

struct FftwFree {
    void operator()(void* p) const { fftw_free(p); }
};
template <class T>
using fftw_buffer = std::unique_ptr<T[], FftwFree>;

template <class T>
fftw_buffer<T> fftw_alloc(std::size_t n)
{
    auto* p = static_cast<T*>(fftw_malloc(sizeof(T) * n));
    if (!p)
        throw std::bad_alloc();
    return fftw_buffer<T>(p);
}

} // namespace detail

/**
 * U_L f = f * K_L on the torus, by forward transforms of f and of K_L
 * sampled at the wrapped offsets, a pointwise product, and an inverse
 * transform. The step must resolve the finest shell (step <= 2^-L / 4) and
 * the kernel support must fit in a quarter period.
 */
inline GridFunction apply_operator(const Kernel& K, int L, const GridFunction& f)
{
    const PeriodicGrid& g = f.grid;
    const int n = g.nvars;
    if (n != K.nvars())
        throw std::invalid_argument("grid dimension does not match the kernel");
    if (f.values.size() != g.size())
        throw std::invalid_argument("grid function has wrong size");
    if (g.step() > std::ldexp(0.25, -L))
        throw std::invalid_argument("grid step too coarse for L = " + std::to_string(L) + "; need step <= 2^-L/4");
    if (K.radius() > 0.25 * g.period)
        throw std::invalid_argument("kernel support does not fit the periodic cell with padding");

    const std::size_t N = g.size();
    const std::size_t Nc = N / g.points * (g.points / 2 + 1);
    std::vector<int> dims(n, g.points);
    const double h = g.step();
    const double cell = std::pow(h, n);

    GridFunction out{g, std::vector<double>(N, 0.0)};
    TruncatedKernel KL(K, L);
    if (L <= K.j_min())
        return out;

    auto real = detail::fftw_alloc<double>(N);
    auto kh = detail::fftw_alloc<fftw_complex>(Nc);
    auto fh = detail::fftw_alloc<fftw_complex>(Nc);

    // K_L at offsets i h, wrapped to [-period/2, period/2)
    std::vector<int> idx(n, 0);
    std::vector<double> y(n);
    for (std::size_t p = 0; p < N; ++p) {
        for (int l = 0; l < n; ++l)
            y[l] = (idx[l] < g.points / 2 ? idx[l] : idx[l] - g.points) * h;
        real[p] = KL(y);
        for (int l = n - 1; l >= 0 && ++idx[l] == g.points; --l)
            idx[l] = 0;
    }
    fftw_plan pk = fftw_plan_dft_r2c(n, dims.data(), real.get(), kh.get(), FFTW_ESTIMATE);
    fftw_execute(pk);
    fftw_destroy_plan(pk);

    std::copy(f.values.begin(), f.values.end(), real.get());
    fftw_plan pf = fftw_plan_dft_r2c(n, dims.data(), real.get(), fh.get(), FFTW_ESTIMATE);
    fftw_execute(pf);
    fftw_destroy_plan(pf);

    // unnormalized inverse: scale by 1/N, and h^n for the convolution sum
    const double scale = cell / static_cast<double>(N);
    for (std::size_t p = 0; p < Nc; ++p) {
        const std::complex<double> a(kh[p][0], kh[p][1]), b(fh[p][0], fh[p][1]);
        const std::complex<double> c = a * b * scale;
        fh[p][0] = c.real();
        fh[p][1] = c.imag();
    }
    fftw_plan pb = fftw_plan_dft_c2r(n, dims.data(), fh.get(), real.get(), FFTW_ESTIMATE);
    fftw_execute(pb);
    fftw_destroy_plan(pb);

    // offsets wrap around the torus, so output index i is again x_i
    std::copy(real.get(), real.get() + N, out.values.begin());
    return out;
}

/**
 * ||U_L f||_2 on the torus for f = exp(-|x|^2/(2 sigma^2)), summed over
 * frequencies 2 pi k / period: period^-n sum |K_L^(xi) f^(xi)|^2 with the
 * piece transforms from quadrature and f^ in closed form. Frequencies with
 * sigma |xi| above the cutoff are dropped.
 */
inline double gaussian_operator_norm(const Kernel& K, int L, double sigma, double period = 1.0,
                                     double sigma_xi_cutoff = 9.0, const FourierOptions& fopt = {})
{
    const int n = K.nvars();
    TruncatedKernel KL(K, L);
    const auto pieces = KL.pieces();
    const double w = 2 * std::numbers::pi / period;
    const int kmax = static_cast<int>(std::ceil(sigma_xi_cutoff / (sigma * w)));
    const double fnorm = std::pow(2 * std::numbers::pi * sigma * sigma, 0.5 * n);

    // frequencies in the half space k_0 >= 0 (|K_L^ f^|^2 is even)
    std::vector<std::vector<double>> xis;
    std::vector<double> weight, fhat;
    std::vector<int> k(n, -kmax);
    k[0] = 0;
    while (true) {
        double r2 = 0;
        for (int v : k)
            r2 += static_cast<double>(v) * v;
        const double s2 = sigma * sigma * w * w * r2;
        if (s2 <= sigma_xi_cutoff * sigma_xi_cutoff) {
            std::vector<double> xi(n);
            for (int l = 0; l < n; ++l)
                xi[l] = w * k[l];
            bool half = k[0] > 0;
            for (int l = 1; l < n && k[0] == 0; ++l) {
                if (k[l] != 0) {
                    half = k[l] > 0;
                    break;
                }
            }
            const bool origin = r2 == 0;
            if (half || origin) {
                xis.push_back(std::move(xi));
                weight.push_back(origin ? 1.0 : 2.0);
                fhat.push_back(fnorm * std::exp(-0.5 * s2));
            }
        }
        int l = n - 1;
        while (l >= 0 && ++k[l] > kmax) {
            k[l] = l == 0 ? 0 : -kmax;
            --l;
        }
        if (l < 0)
            break;
    }

    std::vector<cplx> acc(xis.size(), 0.0);
    for (const auto& piece : pieces) {
        PieceTransformer T(piece, fopt);
        for (std::size_t i = 0; i < xis.size(); ++i)
            acc[i] += T(xis[i]);
    }
    double s = 0;
    for (std::size_t i = 0; i < xis.size(); ++i)
        s += weight[i] * std::norm(acc[i] * fhat[i]);
    return std::sqrt(s / std::pow(period, n));
}

} // namespace nk

#endif
