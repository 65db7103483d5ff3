#include "nk/riesz.hpp"

#include <gtest/gtest.h>

using namespace nk;

TEST(Riesz, KernelFormula)
{
    RieszBlowup k(2, 0.5, 1.0);
    std::vector<double> x = {0.01, 0.2};
    double r2 = 0.01 * 0.01 * (1 + 0.04);
    EXPECT_NEAR(k(x), 0.01 / std::pow(r2, 1.5), 1e-9 * std::abs(k(x)));
    std::vector<double> m = {-0.01, 0.2};
    EXPECT_EQ(k(m), -k(x));
    EXPECT_EQ(k(std::vector<double>{0.01, 1.2}), 0.0);
    EXPECT_THROW(RieszBlowup(4, 0.5, 1.0), std::invalid_argument);
}

TEST(Riesz, TwoDimensionalReport)
{
    auto rep = riesz_blowup_check(2);
    EXPECT_EQ(rep.delta0, Rational(1));
    EXPECT_EQ(rep.monomial, (Exponent{2, 0}));
    EXPECT_TRUE(std::isfinite(rep.refined.C_16));
    EXPECT_TRUE(std::isfinite(rep.refined.C_17));
    EXPECT_GT(rep.refined.C_16, 0.1);
    EXPECT_TRUE(rep.grid_stable) << rep.relative_change;
    EXPECT_LE(rep.x1_cancellation_residual, 1e-12 * std::pow(2.0, 8));
    EXPECT_GT(rep.eps0_fit, 0.5);
    EXPECT_TRUE(rep.parity_invariant);
}

TEST(Riesz, ThreeDimensionalSmallGrid)
{
    RieszOptions o;
    o.grid_density = 8;
    o.j1_values = {3};
    o.jt_values = {3};
    o.decay_j_hi = 10;
    auto rep = riesz_blowup_check(3, o);
    EXPECT_EQ(rep.delta0, Rational(3, 2));
    EXPECT_TRUE(std::isfinite(rep.refined.C_16));
    EXPECT_GT(rep.eps0_fit, 0.5);
    EXPECT_TRUE(rep.parity_invariant);
}
