#include "nk/kernel.hpp"
#include "nk/random.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace nk;

namespace {

double gaussian_at(std::span<const double> y, std::vector<double> c, double sigma)
{
    double s = 0;
    for (std::size_t i = 0; i < y.size(); ++i)
        s += (y[i] - c[i]) * (y[i] - c[i]);
    return std::exp(-s / (2 * sigma * sigma));
}

TestFunction off_center_gaussian()
{
    return [](std::span<const double> y) { return gaussian_at(y, {0.05, 0.03}, 0.1); };
}

} // namespace

TEST(Profiles, WindowsPartitionUnity)
{
    Rng rng(7);
    for (auto prof : {DyadicProfile::Smooth, DyadicProfile::Sharp}) {
        for (int t = 0; t < 200; ++t) {
            double r = std::exp2(rng.uniform(-30.0, 3.0));
            double s = 0;
            for (int j = -10; j <= 40; ++j)
                s += dyadic_window(prof, j, r);
            EXPECT_NEAR(s, 1.0, 1e-14);
        }
    }
}

TEST(Profiles, WindowSupportAndTelescopedSum)
{
    Rng rng(8);
    for (auto prof : {DyadicProfile::Smooth, DyadicProfile::Sharp}) {
        for (int t = 0; t < 300; ++t) {
            double r = std::exp2(rng.uniform(-20.0, 2.0));
            int j = static_cast<int>(rng.uniform(-2.0, 20.0));
            double a = std::ldexp(1.0, -j);
            if (r < a || r > window_span(prof) * a) {
                EXPECT_EQ(dyadic_window(prof, j, r), 0.0);
            }
            double direct = 0;
            for (int k = 2; k <= 12; ++k)
                direct += dyadic_window(prof, k, r);
            EXPECT_NEAR(dyadic_window_sum(prof, 2, 12, r), direct, 1e-14);
        }
    }
}

TEST(Profiles, CutoffPlateau)
{
    EXPECT_EQ(plateau_cutoff(0.0, 0.5), 1.0);
    EXPECT_EQ(plateau_cutoff(0.0625, 0.5), 1.0);
    EXPECT_EQ(plateau_cutoff(0.25, 0.5), 0.0);
    double v = plateau_cutoff(0.15, 0.5);
    EXPECT_GT(v, 0.0);
    EXPECT_LT(v, 1.0);
}

TEST(Quadrature, GaussLegendreExactOnPolynomials)
{
    for (int q : {1, 2, 5, 16, 32}) {
        const auto& g = gauss_legendre(q);
        for (int k = 0; k <= 2 * q - 1; ++k) {
            double s = 0;
            for (std::size_t i = 0; i < g.size(); ++i)
                s += g.weights[i] * std::pow(g.nodes[i], k);
            double exact = (k % 2) ? 0.0 : 2.0 / (k + 1);
            EXPECT_NEAR(s, exact, 1e-13) << "q=" << q << " k=" << k;
        }
    }
}

TEST(Quadrature, CompositeRuleIntegratesExp)
{
    auto r = composite_rule({0.0, 0.5, 2.0}, 3, 8);
    double s = 0;
    for (std::size_t i = 0; i < r.size(); ++i)
        s += r.weights[i] * std::exp(r.nodes[i]);
    EXPECT_NEAR(s, std::exp(2.0) - 1.0, 1e-13);
}

TEST(Kernel, ExampleOneFormula)
{
    auto K = example_kernel(parse_poly("x1*x2", 2), 1.0);
    EXPECT_EQ(K.delta0(), Rational(1));
    Rng rng(3);
    for (int t = 0; t < 200; ++t) {
        double x1 = rng.uniform(-1, 1), x2 = rng.uniform(-1, 1);
        double phi = plateau_cutoff(x1 * x1 + x2 * x2, 1.0);
        double expect = (x1 > 0 ? 1 : -1) * (x2 > 0 ? 1 : -1) * phi / std::abs(x1 * x2);
        EXPECT_NEAR(K({x1, x2}), expect, 1e-12 * std::abs(expect) + 1e-300);
        EXPECT_EQ(K({-x1, x2}), -K({x1, x2}));
        EXPECT_EQ(K({x1, -x2}), -K({x1, x2}));
    }
}

TEST(Kernel, ExampleTwoFormula)
{
    auto K = example_kernel(parse_poly("x1^2+x2^2", 2), 0.5);
    EXPECT_EQ(K.delta0(), Rational(1));
    double x1 = 0.1, x2 = -0.07;
    double expect = -plateau_cutoff(x1 * x1 + x2 * x2, 0.5) / (x1 * x1 + x2 * x2);
    EXPECT_NEAR(K({x1, x2}), expect, 1e-12 * std::abs(expect));
}

TEST(Kernel, VanishesOutsideBall)
{
    auto K = example_kernel(parse_poly("x1*x2", 2), 0.5);
    EXPECT_EQ(K({0.4, 0.31}), 0.0);
    EXPECT_EQ(K({0.0, 0.1}), 0.0);
    EXPECT_NE(K({0.1, 0.1}), 0.0);
}

TEST(Kernel, ConstructionErrors)
{
    EXPECT_THROW(example_kernel(parse_poly("0", 2, true)), std::invalid_argument);
    EXPECT_THROW(example_kernel(parse_poly("1+x1*x2", 2)), std::invalid_argument);
    EXPECT_THROW(example_kernel(parse_poly("x1*x2", 2), 0.0), std::invalid_argument);
    KernelOptions o;
    o.cutoff_shift = {0.1};
    EXPECT_THROW(Kernel(parse_poly("x1*x2", 2), o), std::invalid_argument);
}

TEST(Kernel, JMinFromRadius)
{
    EXPECT_EQ(example_kernel(parse_poly("x1", 1), 0.5).j_min(), 2);
    EXPECT_EQ(example_kernel(parse_poly("x1", 1), 1.0).j_min(), 1);
    EXPECT_EQ(example_kernel(parse_poly("x1", 1), 0.3).j_min(), 2);
    EXPECT_EQ(example_kernel(parse_poly("x1", 1), 8.0).j_min(), -2);
}

TEST(Pieces, ReconstructKernel)
{
    for (const char* b : {"x1*x2", "x1^2+x2^4", "x1^2*x2+x2^3"}) {
        auto K = example_kernel(parse_poly(b, 2), 0.5);
        Rng rng(11);
        for (int t = 0; t < 100; ++t) {
            std::vector<double> y = {std::exp2(rng.uniform(-25, -1)) * (rng.uniform() < 0.5 ? -1 : 1),
                                     std::exp2(rng.uniform(-25, -1)) * (rng.uniform() < 0.5 ? -1 : 1)};
            double s = 0;
            for (int j1 = K.j_min(); j1 <= 30; ++j1)
                for (int j2 = K.j_min(); j2 <= 30; ++j2)
                    s += dyadic_piece(K, {j1, j2})(y);
            double k = K(y);
            EXPECT_NEAR(s, k, 1e-12 * std::abs(k) + 1e-300) << b;
        }
    }
}

TEST(Pieces, TruncatedKernelMatchesPieceSum)
{
    auto K = example_kernel(parse_poly("x1*x2", 2), 0.5);
    TruncatedKernel KL(K, 9);
    auto pieces = KL.pieces();
    Rng rng(12);
    for (int t = 0; t < 100; ++t) {
        std::vector<double> y = {rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)};
        double s = 0;
        for (const auto& p : pieces)
            s += p(y);
        EXPECT_NEAR(KL(y), s, 1e-12 * std::abs(s) + 1e-300);
    }
}

TEST(Pieces, EscapingSupportIsZero)
{
    auto K = example_kernel(parse_poly("x1*x2", 2), 0.5);
    EXPECT_TRUE(dyadic_piece(K, {1, 5}).is_zero());
    EXPECT_FALSE(dyadic_piece(K, {2, 5}).is_zero());
    EXPECT_EQ(dyadic_piece(K, {1, 5})({0.6, 0.03}), 0.0);
}

TEST(Pieces, OneDimensionalBound)
{
    auto K = example_kernel(parse_poly("x1", 1), 0.5);
    for (int j = 2; j <= 20; ++j) {
        auto p = dyadic_piece(K, {j});
        for (int k = 0; k <= 400; ++k) {
            double y = p.lower(0) * (1 + 3.0 * k / 400);
            EXPECT_LE(std::abs(p({y})) * y, 1.0 + 1e-15);
        }
        auto b = verify_piece_bounds(p, 32);
        EXPECT_LE(b.C_23, 1.0 + 1e-12);
        if (j >= 4) {
            EXPECT_GT(b.C_23, 0.9);
        }
    }
}

TEST(Pieces, BoundsAreScaleStableInsidePlateau)
{
    // with R = 8 every piece with j_l >= 2 lies where the cutoff is 1
    auto K = example_kernel(parse_poly("x1*x2", 2), 8.0);
    auto ref = verify_piece_bounds(dyadic_piece(K, {2, 2}), 32);
    EXPECT_GT(ref.C_23, 0.0);
    EXPECT_TRUE(std::isfinite(ref.C_24));
    EXPECT_TRUE(std::isfinite(ref.C_213));
    double ref11 = 0;
    for (auto& [a, v] : ref.per_alpha)
        if (a == Exponent{1, 1})
            ref11 = v;
    EXPECT_GT(ref11, 0.0);
    for (int j1 : {2, 5, 9, 12})
        for (int j2 : {3, 7, 12}) {
            auto b = verify_piece_bounds(dyadic_piece(K, {j1, j2}), 32);
            EXPECT_NEAR(b.C_23 / ref.C_23, 1.0, 0.05);
            EXPECT_NEAR(b.C_24 / ref.C_24, 1.0, 0.05);
            for (auto& [a, v] : b.per_alpha)
                if (a == Exponent{1, 1}) {
                    EXPECT_NEAR(v / ref11, 1.0, 0.05);
                }
        }
}

TEST(Pieces, DefaultRadiusBoundsFinite)
{
    auto K = example_kernel(parse_poly("x1*x2", 2));
    for (int j1 : {2, 6})
        for (int j2 : {2, 11}) {
            auto b = verify_piece_bounds(dyadic_piece(K, {j1, j2}), 32);
            EXPECT_TRUE(std::isfinite(b.C_213));
            EXPECT_LE(b.C_23, 1.0 + 1e-12);
        }
    EXPECT_THROW(verify_piece_bounds(dyadic_piece(K, {3, 3}), 16), std::invalid_argument);
}

TEST(Cancellation, OddPiecesCancelExactly)
{
    for (const char* b : {"x1*x2", "x1^2+x2^2", "x1^2*x2+x2^3", "x1^4+x1^2*x2^2+x2^6"}) {
        auto K = example_kernel(parse_poly(b, 2), 0.5);
        for (int j1 : {2, 4, 9})
            for (int j2 : {2, 7})
                for (int axis : {1, 2})
                    EXPECT_LE(verify_cancellation(dyadic_piece(K, {j1, j2}), axis, 16), 1e-12) << b;
    }
    auto K1 = example_kernel(parse_poly("x1", 1), 0.5);
    for (int j = 2; j < 20; ++j)
        EXPECT_EQ(verify_cancellation(dyadic_piece(K1, {j}), 1, 16), 0.0);
}

TEST(Cancellation, ShiftedCutoffBreaksIt)
{
    KernelOptions o;
    o.radius = 0.5;
    o.cutoff_shift = {0.2, 0.0};
    Kernel K(parse_poly("x1*x2", 2), o);
    EXPECT_GT(verify_cancellation(dyadic_piece(K, {2, 3}), 1, 16), 1e-6);
    EXPECT_THROW(verify_cancellation(dyadic_piece(K, {2, 3}), 1, 8), std::invalid_argument);
}

TEST(MixedDifference, Examples)
{
    TestFunction f1 = [](std::span<const double> y) { return std::cos(y[0]) + 3 * y[0]; };
    std::vector<double> y1 = {0.3};
    EXPECT_DOUBLE_EQ(mixed_difference(f1, y1), f1(y1) - 1.0);

    TestFunction prod = [](std::span<const double> y) { return y[0] * y[1]; };
    std::vector<double> y2 = {0.3, -0.7};
    EXPECT_DOUBLE_EQ(mixed_difference(prod, y2), 0.3 * -0.7);

    TestFunction sq = [](std::span<const double> y) { return y[0] * y[0]; };
    EXPECT_EQ(mixed_difference(sq, y2), 0.0);
    EXPECT_THROW(mixed_difference(sq, y2, {0, 0}), std::invalid_argument);
}

TEST(MixedDifference, BoundedByMixedPartial)
{
    // Gaussian: sup |d1 d2 phi| estimated on a fine grid
    auto phi = off_center_gaussian();
    double M = 0;
    for (int a = -200; a <= 200; ++a)
        for (int b = -200; b <= 200; ++b) {
            std::vector<double> y = {a * 0.005, b * 0.005};
            double h = 1e-4;
            double d = (phi(std::vector<double>{y[0] + h, y[1] + h}) - phi(std::vector<double>{y[0] + h, y[1] - h})
                        - phi(std::vector<double>{y[0] - h, y[1] + h}) + phi(std::vector<double>{y[0] - h, y[1] - h}))
                / (4 * h * h);
            M = std::max(M, std::abs(d));
        }
    Rng rng(5);
    for (int t = 0; t < 500; ++t) {
        std::vector<double> y = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
        EXPECT_LE(std::abs(mixed_difference(phi, y)), std::abs(y[0] * y[1]) * M * (1 + 1e-3));
    }
}

TEST(Pairing, AgreesWithTruncatedIntegral)
{
    auto K = example_kernel(parse_poly("x1*x2", 2), 0.5);
    auto phi = off_center_gaussian();
    auto res = pair_with_test_function(K, phi);
    EXPECT_TRUE(res.converged);
    EXPECT_GT(std::abs(res.value), 1e-3);
    double direct = truncated_integral(TruncatedKernel(K, 20), phi);
    EXPECT_NEAR(res.value, direct, 1e-3);

    double prev = std::numeric_limits<double>::infinity();
    for (int L = 8; L <= 20; L += 2) {
        double gap = std::abs(res.value - truncated_integral(TruncatedKernel(K, L), phi));
        EXPECT_LE(gap, prev * (1 + 1e-9));
        prev = gap;
    }
}

TEST(Pairing, PeelingOrderIrrelevant)
{
    auto K = example_kernel(parse_poly("x1*x2", 2), 0.5);
    auto phi = off_center_gaussian();
    PairingOptions a, b;
    a.peeling_order = {0, 1};
    b.peeling_order = {1, 0};
    EXPECT_NEAR(pair_with_test_function(K, phi, a).value, pair_with_test_function(K, phi, b).value, 1e-12);
}

TEST(Pairing, SymmetryAndLinearity)
{
    auto K = example_kernel(parse_poly("x1*x2", 2), 0.5);
    TestFunction even1 = [](std::span<const double> y) { return gaussian_at(y, {0.0, 0.04}, 0.1); };
    auto base = pair_with_test_function(K, off_center_gaussian());
    EXPECT_LE(std::abs(pair_with_test_function(K, even1).value), 1e-12 * base.abs_sum);

    TestFunction zero = [](std::span<const double>) { return 0.0; };
    EXPECT_EQ(pair_with_test_function(K, zero).value, 0.0);

    TestFunction g = [](std::span<const double> y) { return gaussian_at(y, {-0.02, 0.06}, 0.08); };
    TestFunction combo = [&](std::span<const double> y) { return 2.5 * off_center_gaussian()(y) - g(y); };
    double lhs = pair_with_test_function(K, combo).value;
    double rhs = 2.5 * base.value - pair_with_test_function(K, g).value;
    EXPECT_NEAR(lhs, rhs, 1e-10 * base.abs_sum);
}

TEST(Pairing, UnsignedKernelTruncationsDiverge)
{
    KernelOptions o;
    o.sign = SignMode::Unsigned;
    Kernel K(parse_poly("x1*x2", 2), o);
    auto phi = off_center_gaussian();
    double prev = truncated_integral(TruncatedKernel(K, 8), phi);
    for (int L = 12; L <= 20; L += 4) {
        double v = truncated_integral(TruncatedKernel(K, L), phi);
        EXPECT_GT(v - prev, 1.0);
        prev = v;
    }
}

TEST(Pairing, BudgetExhaustionReportsPartialSums)
{
    auto K = example_kernel(parse_poly("x1*x2", 2), 0.5);
    PairingOptions o;
    o.max_shell = 6;
    try {
        pair_with_test_function(K, off_center_gaussian(), o);
        FAIL() << "expected divergence";
    } catch (const PairingDivergence& e) {
        EXPECT_EQ(e.partial().shell_values.size(), 5u);
        EXPECT_FALSE(e.partial().converged);
    }
}
