#include "nk/fourier.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <gtest/gtest.h>

#include <cmath>

using namespace nk;
using boost::math::quadrature::gauss_kronrod;

namespace {

Kernel sharp_1d(SignMode sign = SignMode::Symmetrized)
{
    KernelOptions o;
    o.profile = DyadicProfile::Sharp;
    o.sign = sign;
    return example_kernel(parse_poly("x1", 1), 0.5, o);
}

double gk(auto f, double a, double b) { return gauss_kronrod<double, 31>::integrate(f, a, b, 15, 1e-14); }

} // namespace

TEST(PieceTransform, SharpPieceMatchesOracle)
{
    const Kernel K = sharp_1d();
    for (int j : {3, 6, 10}) {
        PieceTransformer T(dyadic_piece(K, {j}));
        const double a = std::ldexp(1.0, -j);
        for (double u : {0.01, 0.7, 5.0, 37.0, 400.0}) {
            const double xi = u / a;
            const cplx v = T({xi});
            const double want = -2 * gk([&](double y) { return std::sin(xi * y) / y; }, a, 2 * a);
            EXPECT_LE(std::abs(v.real()), 1e-10);
            EXPECT_NEAR(v.imag(), want, 1e-8 * std::max(1.0, std::abs(want)));
        }
    }
}

TEST(PieceTransform, GeneralPathMatchesOracle)
{
    // unsigned kernel is even, so no odd shortcut applies
    const Kernel K = sharp_1d(SignMode::Unsigned);
    ASSERT_FALSE(K.odd_symmetric());
    PieceTransformer T(dyadic_piece(K, {5}));
    const double a = std::ldexp(1.0, -5);
    for (double xi : {0.0, 10.0, 300.0, 5000.0}) {
        const cplx v = T({xi});
        const double want = 2 * gk([&](double y) { return std::cos(xi * y) / y; }, a, 2 * a);
        EXPECT_NEAR(v.real(), want, 1e-8 * std::max(1.0, std::abs(want)));
        EXPECT_LE(std::abs(v.imag()), 1e-10);
    }
}

TEST(PieceTransform, ConjugateSymmetry)
{
    const Kernel K = example_kernel(parse_poly("x1*x2", 2));
    PieceTransformer T(dyadic_piece(K, {4, 7}));
    const std::vector<std::array<double, 2>> xis = {{3.0, 50.0}, {-120.0, 9.0}, {700.0, -2000.0}};
    for (auto x : xis) {
        const cplx p = T({x[0], x[1]});
        const cplx m = T({-x[0], -x[1]});
        EXPECT_NEAR(std::abs(p - std::conj(m)), 0.0, 1e-12 * std::max(1.0, std::abs(p)));
        // odd in each variable: the transform is real
        EXPECT_LE(std::abs(p.imag()), 1e-12 * std::max(1.0, std::abs(p)));
    }
}

TEST(PieceTransform, MomentParityFlip)
{
    const Kernel K = sharp_1d();
    PieceTransformer T(dyadic_piece(K, {4}));
    const double a = std::ldexp(1.0, -4);
    const double xi = 90.0;
    // transform of y K(y) without the (-i) factor is real
    const cplx raw = T({xi}, {1}) / cplx(0, -1);
    const double want = 2 * gk([&](double y) { return std::cos(xi * y); }, a, 2 * a);
    EXPECT_NEAR(raw.real(), want, 1e-10);
    EXPECT_LE(std::abs(raw.imag()), 1e-12);
    EXPECT_LE(std::abs(T({xi}).real()), 1e-12);

    const Kernel K2 = example_kernel(parse_poly("x1*x2", 2));
    PieceTransformer T2(dyadic_piece(K2, {5, 5}));
    const cplx r0 = T2({40.0, 70.0});
    const cplx r1 = T2({40.0, 70.0}, {1, 0}) / cplx(0, -1);
    EXPECT_LE(std::abs(r0.imag()), 1e-12 * std::abs(r0));
    EXPECT_LE(std::abs(r1.real()), 1e-12 * std::abs(r1));
}

TEST(PieceTransform, UnderResolvedFrequencyThrows)
{
    FourierOptions o;
    o.max_level = 2;
    PieceTransformer T(dyadic_piece(sharp_1d(), {3}), o);
    EXPECT_NO_THROW(T({100.0}));
    EXPECT_THROW(T({1e6}), std::runtime_error);
    EXPECT_THROW(T({1.0, 2.0}), std::invalid_argument);
}

TEST(FourierDecay, SharpOneDimensional)
{
    const Kernel K = sharp_1d();
    for (int j : {3, 6, 10}) {
        const FourierDecay d = verify_fourier_decay(dyadic_piece(K, {j}));
        EXPECT_LE(d.C_small, 2.1) << "j=" << j;
        EXPECT_GT(d.C_small, 1.9) << "j=" << j;
        EXPECT_GE(d.rho_fit, 0.5) << "j=" << j;
    }
}

TEST(FourierDecay, ProductPiecesUniform)
{
    const Kernel K = example_kernel(parse_poly("x1*x2", 2));
    double cmin = 1e300, cmax = 0, rmin = 1e300, rmax = 0;
    for (int j1 : {3, 6, 10})
        for (int j2 : {3, 6, 10}) {
            const FourierDecay d = verify_fourier_decay(dyadic_piece(K, {j1, j2}));
            cmin = std::min(cmin, d.C_small);
            cmax = std::max(cmax, d.C_small);
            rmin = std::min(rmin, d.rho_fit);
            rmax = std::max(rmax, d.rho_fit);
        }
    EXPECT_LE(cmax / cmin, 2.0);
    EXPECT_GT(rmin, 0.0);
    EXPECT_LE(rmax / rmin - 1.0, 0.10);
}

TEST(FourierDecay, RateStableUnderRefinement)
{
    const Kernel K = example_kernel(parse_poly("x1*x2", 2));
    const KernelPiece p = dyadic_piece(K, {5, 8});
    DecayOptions fine;
    fine.per_decade *= 2;
    const double r0 = verify_fourier_decay(p).rho_fit;
    const double r1 = verify_fourier_decay(p, fine).rho_fit;
    EXPECT_GT(r0, 0.0);
    EXPECT_LE(std::abs(r1 / r0 - 1.0), 0.10);
}

TEST(Multiplier, ZeroFrequencyVanishesExactly)
{
    const Kernel K = example_kernel(parse_poly("x1*x2", 2));
    const MultiplierSup m = multiplier_sup_bound(K, {4, 6, 8});
    for (const cplx& z : m.at_zero)
        EXPECT_EQ(std::abs(z), 0.0);
    for (double s : m.sup) {
        EXPECT_TRUE(std::isfinite(s));
        EXPECT_GT(s, 0.0);
    }
}

TEST(Multiplier, GridDoublingStable)
{
    const Kernel K = example_kernel(parse_poly("x1*x2", 2));
    MultiplierOptions fine;
    fine.per_octave *= 2;
    fine.fixed_directions *= 2;
    fine.random_directions *= 2;
    const MultiplierSup a = multiplier_sup_bound(K, {6, 8});
    const MultiplierSup b = multiplier_sup_bound(K, {6, 8}, fine);
    for (std::size_t i = 0; i < a.sup.size(); ++i)
        EXPECT_LE(std::abs(b.sup[i] / a.sup[i] - 1.0), 0.05);
}

TEST(Multiplier, OneDimensionalSupIsBounded)
{
    // sup of 2|Si(R xi) - Si(eps xi)| stays below 2 Si(pi)
    const Kernel K = sharp_1d();
    MultiplierOptions o;
    o.fourier.max_level = 14;
    const MultiplierSup m = multiplier_sup_bound(K, {6, 9, 12}, o);
    const double bound = 2 * gk([](double t) { return std::sin(t) / t; }, 0.0, std::numbers::pi);
    for (double s : m.sup)
        EXPECT_LE(s, bound * (1 + 1e-9));
    EXPECT_LE(m.sup.front(), m.sup.back() * (1 + 1e-12));
}

TEST(Marcinkiewicz, AlphaZeroMatchesMultiplier)
{
    const Kernel K = example_kernel(parse_poly("x1*x2", 2));
    const std::vector<int> Ls = {5, 7};
    const MultiplierSup m = multiplier_sup_bound(K, Ls);
    const auto grid = multiplier_grid(2, 9, MultiplierOptions{});
    const SymbolSups s = marcinkiewicz_check(K, Ls, {{1, 1}, {0, 0}}, grid);
    ASSERT_EQ(s.sup.size(), 2u);
    for (std::size_t i = 0; i < Ls.size(); ++i)
        EXPECT_EQ(s.sup[1][i], m.sup[i]);
    EXPECT_THROW(marcinkiewicz_check(K, Ls, {{1}}, grid), std::invalid_argument);
}

TEST(Marcinkiewicz, MixedSymbolBounded)
{
    const Kernel K = example_kernel(parse_poly("x1*x2", 2));
    const auto grid = multiplier_grid(2, 14, MultiplierOptions{});
    const SymbolSups s = marcinkiewicz_check(K, {8, 12}, {{1, 1}}, grid);
    EXPECT_GT(s.sup[0][0], 0.0);
    EXPECT_LE(std::abs(s.sup[0][1] / s.sup[0][0] - 1.0), 0.10);
}
