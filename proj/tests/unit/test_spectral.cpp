#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "sidlab/interp.hpp"
#include "sidlab/spectral.hpp"

using namespace sidlab;

TEST(SpectralGrid, TrapezoidWeightsSumToLength) {
    const auto g = make_grid({0.0, 10.0}, 64);
    EXPECT_NEAR(g.weight_sum(), 10.0, 1e-13);
    EXPECT_DOUBLE_EQ(g.front(), 0.0);
    EXPECT_DOUBLE_EQ(g.back(), 10.0);
    EXPECT_TRUE(g.uniform());
    EXPECT_NEAR(g.spacing(), 10.0 / 63.0, 1e-15);
}

TEST(SpectralGrid, PeriodicRuleExcludesRightEndpoint) {
    const auto g = make_grid({0.0, 2.0 * std::numbers::pi}, 16, QuadratureRule::periodic);
    EXPECT_LT(g.back(), 2.0 * std::numbers::pi);
    // Trigonometric polynomials of degree below n integrate exactly.
    const double s = quad_integrate([](double x) { return std::cos(3.0 * x) * std::cos(3.0 * x); }, g);
    EXPECT_NEAR(s, std::numbers::pi, 1e-13);
}

TEST(SpectralGrid, GaussLegendreIsExactForDegree2nMinus1) {
    const auto g = make_grid({-1.0, 2.0}, 5, QuadratureRule::gauss_legendre);
    const double s = quad_integrate([](double x) { return std::pow(x, 9); }, g);
    EXPECT_NEAR(s, (std::pow(2.0, 10) - 1.0) / 10.0, 1e-11);
}

TEST(SpectralGrid, GaussianMomentsOnTrapezoid) {
    const auto g = make_grid({-12.0, 12.0}, 64);
    const double m0 = quad_integrate([](double x) { return std::exp(-x * x / 2.0); }, g);
    EXPECT_NEAR(m0, std::sqrt(2.0 * std::numbers::pi), 1e-12);
}

TEST(SpectralGrid, RejectsInvalidInput) {
    EXPECT_THROW(make_grid({1.0, 1.0}, 8), std::invalid_argument);
    EXPECT_THROW(make_grid({0.0, 1.0}, 1), std::invalid_argument);
    EXPECT_THROW(SpectralGrid({0.0, 1.0}, {0.5, 0.2}, {1.0, 1.0}, "x", QuadratureRule::lattice), std::invalid_argument);
    EXPECT_THROW(SpectralGrid({0.0, 1.0}, {0.2, 0.5}, {1.0, -1.0}, "x", QuadratureRule::lattice), std::invalid_argument);
    EXPECT_THROW(lattice_grid({}, {}, "x"), std::invalid_argument);
}

TEST(SpectralGrid, NearestAndCompatibility) {
    const auto g = make_grid({0.0, 1.0}, 11);
    EXPECT_EQ(g.nearest(0.34), 3u);
    EXPECT_EQ(g.nearest(-5.0), 0u);
    EXPECT_EQ(g.nearest(5.0), 10u);
    EXPECT_TRUE(g.compatible(make_grid({0.0, 1.0}, 11)));
    EXPECT_FALSE(g.compatible(make_grid({0.0, 1.0}, 12)));
}

TEST(SpectralGrid, IndexGridHasUnitWeights) {
    const auto g = index_grid(4);
    EXPECT_EQ(g.size(), 4u);
    EXPECT_DOUBLE_EQ(g.weight_sum(), 4.0);
    EXPECT_EQ(g.rule(), QuadratureRule::lattice);
}

TEST(SpectralGrid, TruncationMassOfGaussianTail) {
    const auto g = make_grid({0.0, 10.0}, 64);
    const auto rho = [](double x) { return std::exp(-(x - 5.0) * (x - 5.0) / 2.0); };
    // ∫_10^∞ e^{−(x−5)²/2} dx = √(π/2) erfc(5/√2).
    const double exact = std::sqrt(std::numbers::pi / 2.0) * std::erfc(5.0 / std::sqrt(2.0));
    EXPECT_NEAR(truncation_mass(rho, g, 20.0, 20001), exact, 1e-9);
}

TEST(Interpolation, LagrangeReproducesQuintics) {
    const auto g = make_grid({0.0, 3.0}, 31);
    const auto f = [](double x) { return 1.0 - 2.0 * x + std::pow(x, 5); };
    for (double x : {0.05, 1.234, 2.96}) {
        const auto st = lagrange_stencil<6>(g, x);
        double v = 0.0;
        for (std::size_t t = 0; t < st.count; ++t) v += st.w[t] * f(g.node(st.start + t));
        EXPECT_NEAR(v, f(x), 1e-11);
    }
}
