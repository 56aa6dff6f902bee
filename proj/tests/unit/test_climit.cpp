#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "sidlab/climit.hpp"
#include "sidlab/diagonal.hpp"
#include "sidlab/evolution.hpp"

using namespace sidlab;

namespace {

double gauss(double x, double c, double w) { return std::exp(-(x - c) * (x - c) / (2 * w * w)); }

/// Energy-diagonal Gaussian population plus a coherence kernel, on the model's level grid.
StateFunctional model_state(const ModelSpec& m, double hbar, double c, double b, double s, double amp) {
    const auto omega = level_grid(m, hbar), o = label_grid(m, hbar);
    StateFunctional rho = zero_state(omega, o);
    for (std::size_t w = 0; w < omega.size(); ++w)
        for (std::size_t k = 0; k < o.size(); ++k)
            if (ket_exists(m, w, k)) rho.singular(w, k, k) = gauss(omega.node(w), c, b) * std::exp(-0.5 * k) / o.weight(k);
    for (std::size_t w = 0; w < omega.size(); ++w)
        for (std::size_t v = 0; v < omega.size(); ++v)
            for (std::size_t k = 0; k < o.size(); ++k)
                if (ket_exists(m, w, k) && ket_exists(m, v, k))
                    rho.regular(w, v, k, k) = amp * gauss(omega.node(w), c, b) * gauss(omega.node(v), c, b) *
                                              gauss(omega.node(w) - omega.node(v), 0.0, s) / o.weight(k);
    return normalize(rho);
}

Observable energy_observable(const ModelSpec& m, double hbar) {
    const auto omega = level_grid(m, hbar), o = label_grid(m, hbar);
    Observable A = zero_observable(omega, o);
    A.singular_delta = true;
    for (std::size_t w = 0; w < omega.size(); ++w)
        for (std::size_t k = 0; k < o.size(); ++k) A.singular(w, k, k) = omega.node(w) / o.weight(k);
    for (std::size_t w = 0; w < omega.size(); ++w)
        for (std::size_t v = 0; v < omega.size(); ++v)
            for (std::size_t k = 0; k < o.size(); ++k) A.regular(w, v, k, k) = 1.0 / o.weight(k);
    return A;
}

}  // namespace

TEST(Models, LevelGrids) {
    const auto ft = level_grid(free_translation_model(8.0, 4), 1.0);
    EXPECT_NEAR(ft.node(3), 3.0 * 2.0 * std::numbers::pi / 8.0, 1e-14);
    const auto osc = level_grid(oscillator_model(5), 0.5);
    EXPECT_NEAR(osc.node(0), 0.25, 1e-15);
    EXPECT_NEAR(osc.weight(2), 0.5, 1e-15);
    const auto m2 = two_oscillator_model(4);
    EXPECT_NEAR(level_grid(m2, 1.0).node(0), 1.0, 1e-15);
    EXPECT_TRUE(ket_exists(m2, 2, 2));
    EXPECT_FALSE(ket_exists(m2, 2, 3));
}

TEST(Models, ClassicalSymbolsCommute) {
    for (const auto& m : {free_translation_model(), oscillator_model(), two_oscillator_model()})
        for (const auto& P : m.P) EXPECT_TRUE(poisson_bracket(m.H, P).is_zero(1e-14)) << m.name();
}

TEST(Models, OscillatorWignerClosedForms) {
    const double h = 0.5;
    // W_0 = (πℏ)^{-1} e^{−2H/ℏ}; W_1 = −(πℏ)^{-1} e^{−2H/ℏ}(1 − 4H/ℏ).
    for (double H : {0.0, 0.3, 1.7}) {
        EXPECT_NEAR(oscillator_wigner(0, H, h), std::exp(-2 * H / h) / (std::numbers::pi * h), 1e-14);
        EXPECT_NEAR(oscillator_wigner(1, H, h), -std::exp(-2 * H / h) * (1 - 4 * H / h) / (std::numbers::pi * h), 1e-14);
    }
    // Each W_n integrates to one: 2π ∫ W_n(H) dH.
    for (std::size_t n : {0u, 3u, 6u}) {
        const auto g = make_grid({0.0, 40.0}, 400, QuadratureRule::gauss_legendre);
        const double s = 2 * std::numbers::pi * quad_integrate([&](double H) { return oscillator_wigner(n, H, h); }, g);
        EXPECT_NEAR(s, 1.0, 1e-7) << "n = " << n;
    }
}

TEST(Models, KetWignerFunctionsIntegrateToOne) {
    const auto m = oscillator_model(6, 48);
    const auto kets = make_kets(m, 0.5);
    for (std::size_t a = 0; a < kets->basis_size(); ++a) EXPECT_NEAR(integrate(kets->state_wigner(a, a)).real(), 1.0, 1e-9);
    EXPECT_NEAR(std::abs(integrate(kets->state_wigner(0, 2))), 0.0, 1e-10);
}

TEST(PhaseSpaceRoute, OscillatorMatchesQuantumPairing) {
    const auto m = oscillator_model(8, 64);
    const double h = 0.5;
    const auto rho = model_state(m, h, 2.0, 0.8, 1.0, 0.5);
    const auto A = energy_observable(m, h);
    const auto ts = pre_revival_times(rho.omega, h, 16);
    const auto ev = phase_space_evolution(rho, A, m, ts, h);
    EXPECT_LT(ev.max_route_residual, 1e-6);
    EXPECT_LT(ev.limit_residual, 1e-8);
}

TEST(PhaseSpaceRoute, FreeTranslationMatchesAndDecays) {
    const auto m = free_translation_model(8.0, 32, 64);
    const auto rho = model_state(m, 1.0, 12.0, 3.0, 1.5, 0.5);
    const auto A = energy_observable(m, 1.0);
    const auto ts = pre_revival_times(rho.omega, 1.0, 16);
    const auto ev = phase_space_evolution(rho, A, m, ts, 1.0);
    EXPECT_LT(ev.max_route_residual, 1e-6);
    EXPECT_LT(ev.limit_residual, 1e-8);
    EXPECT_LT(ev.end_residual, 1e-6);
}

TEST(PhaseSpaceRoute, TwoOscillatorIsUnsupported) {
    const auto m = two_oscillator_model(3, 8);
    const auto rho = model_state(m, 1.0, 2.0, 1.0, 1.0, 0.1);
    EXPECT_THROW(phase_space_evolution(rho, energy_observable(m, 1.0), m, {0.0, 0.1}, 1.0), UnsupportedModelError);
}

TEST(StateSymbol, TwoOscillatorDiagonalStateIntegratesToOne) {
    const auto m = two_oscillator_model(4, 24);
    const auto rho = decohered_state(model_state(m, 0.5, 1.5, 0.6, 1.0, 0.0));
    EXPECT_NEAR(integrate(state_symbol(rho, m, 0.5)).real(), 1.0, 1e-4);
}

TEST(InvariantVolume, ActionAngleOscillatorGivesTwoPi) {
    const auto m = oscillator_model();
    const auto v = invariant_volume(m, 1.0, {}, 0.1, classical_chart(m, 4.0, 1.0, 64), 8);
    EXPECT_NEAR(v.volume / (2 * std::numbers::pi), 1.0, 0.02);
}

TEST(InvariantVolume, RescaledHamiltonianGivesPi) {
    ModelSpec m = oscillator_model();
    m.H = PolySymbol::q() * PolySymbol::q() + PolySymbol::p() * PolySymbol::p();
    const auto v = invariant_volume(m, 2.0, {}, 0.1, classical_chart(oscillator_model(), 4.0, 1.0, 64), 8);
    EXPECT_NEAR(v.volume / std::numbers::pi, 1.0, 0.02);
}

TEST(InvariantVolume, EmptyBandThrows) {
    const auto m = oscillator_model();
    EXPECT_THROW(invariant_volume(m, 1e3, {}, 0.1, classical_chart(m, 1.0, 1.0, 16), 1), EmptyLevelSetError);
}

namespace {

struct ClassicalFixture {
    ModelSpec m = oscillator_model(8, 64);
    double h = 0.5, sigma = 0.35;
    DiagonalState diag;
    PhaseSpaceChart chart;

    ClassicalFixture() {
        diag = find_pointer_basis(decohered_state(model_state(m, h, 2.0, 0.6, 1.0, 0.3))).second;
        chart = classical_chart(m, 3.75, 1.0, 64);
    }
};

}  // namespace

TEST(ClassicalDistribution, NonNegativeAndNormalized) {
    ClassicalFixture f;
    const auto rc = classical_distribution(f.diag, f.m, f.sigma, f.chart);
    EXPECT_GE(rc.min_value, 0.0);
    EXPECT_NEAR(rc.integral, 1.0, 1e-6);
    EXPECT_EQ(rc.terms.size(), 8u);
}

TEST(ClassicalDistribution, ConstantAlongFlowButNotAcrossRidges) {
    ClassicalFixture f;
    const auto rc = classical_distribution(f.diag, f.m, f.sigma, f.chart);
    const auto tr = hamiltonian_flow(f.m, {std::sqrt(2.0 * 1.75), 0.0}, 2 * std::numbers::pi, 20000);
    EXPECT_TRUE(constancy_check(rc, tr).pass);
    const auto cross = hamiltonian_flow(PolySymbol::p(), {-1.0, 0.0}, 2.5, 200);
    EXPECT_FALSE(constancy_check(rc, cross).pass);
}

TEST(ClassicalDistribution, UnresolvedSigmaIsRejected) {
    ClassicalFixture f;
    EXPECT_THROW(classical_distribution(f.diag, f.m, 0.05, f.chart), ResolutionError);
}

TEST(HamiltonianFlow, OscillatorReturnsAfterOnePeriod) {
    const auto tr = hamiltonian_flow(oscillator_model(), {1.0, 0.5}, 2 * std::numbers::pi, 4000);
    EXPECT_EQ(tr.integrator, "leapfrog");
    EXPECT_NEAR(tr.points.back()[0], 1.0, 1e-5);
    EXPECT_NEAR(tr.points.back()[1], 0.5, 1e-5);
}

TEST(HamiltonianFlow, NonSeparableUsesImplicitMidpoint) {
    const PolySymbol q = PolySymbol::q(), p = PolySymbol::p();
    const PolySymbol H = (q * q + p * p) * (q * q + p * p) * 0.25;
    const auto tr = hamiltonian_flow(H, {1.0, 0.0}, 3.0, 3000);
    EXPECT_EQ(tr.integrator, "implicit_midpoint");
    EXPECT_LT(tr.max_drift, 1e-9);
}

TEST(Interpolation, LeavingTheChartThrows) {
    const auto chart = classical_chart(oscillator_model(), 1.0, 1.0, 16);
    const std::vector<double> v(chart.size(), 1.0);
    EXPECT_NEAR(interpolate(chart, v, {0.1, -0.2}), 1.0, 1e-12);
    EXPECT_THROW(interpolate(chart, v, {10.0, 0.0}), OutOfDomainError);
}

TEST(Positivity, CharacteristicFunctionMatchesLaguerreOracle) {
    const auto rho = [](double w) { return gauss(w, 1.5, 0.3) + 0.5 * gauss(w, 2.5, 0.3); };
    const RadialWigner W(rho, 0.5, 6.0);
    const RadialCharacteristic f(W, 6.0 + 8.0 * std::sqrt(6.0) + 2.0, 8001);
    EXPECT_NEAR(f.mass(), 1.0, 1e-8);
    for (double z : {0.3, 1.0, 2.2}) EXPECT_NEAR(f(z), W.characteristic_oracle(z * z), 1e-7);
}

TEST(Positivity, PositiveTypeMatricesAndShrinkingNegativeMass) {
    const auto rho = [](double w) { return gauss(w, 1.5, 0.3) + 0.5 * gauss(w, 2.5, 0.3); };
    PositivityOptions opt;
    opt.radial_nodes = 4001;
    const auto rep = positivity_check(rho, oscillator_model(), {1.0, 0.5, 0.25}, opt);
    EXPECT_TRUE(rep.matrices_pass);
    EXPECT_TRUE(rep.negative_mass_decreasing);
    // Frozen from the radial quadrature at 8001 nodes.
    EXPECT_NEAR(rep.levels[0].negative_mass_fraction, 0.0969, 1e-3);
    EXPECT_NEAR(rep.levels[1].negative_mass_fraction, 0.0761, 1e-3);
    EXPECT_NEAR(rep.levels[2].negative_mass_fraction, 0.0338, 1e-3);
}

TEST(Positivity, PointSetsAreSeeded) {
    const auto rho = [](double w) { return gauss(w, 1.0, 0.4); };
    PositivityOptions opt;
    opt.radial_nodes = 1001;
    opt.sets = 3;
    const auto a = positivity_check(rho, oscillator_model(), {1.0, 0.5}, opt);
    const auto b = positivity_check(rho, oscillator_model(), {1.0, 0.5}, opt);
    EXPECT_EQ(a.levels[1].min_eigenvalue, b.levels[1].min_eigenvalue);
    EXPECT_EQ(a.seed, 7u);
}

TEST(Positivity, OtherModelsAreUnsupported) {
    EXPECT_THROW(positivity_check([](double) { return 1.0; }, free_translation_model(), {1.0}), UnsupportedModelError);
}

TEST(Sharpening, FreeTranslationWindowConcentratesOnTheLevelSet) {
    const auto m = free_translation_model();
    const std::vector<double> hs = {1.0, 0.5, 0.25, 0.125, 0.0625};
    const auto rep = eigen_symbol_limit(m, 2.0 * 2.0 * std::numbers::pi / m.box_length, hs);
    EXPECT_TRUE(rep.mass_monotone);
    EXPECT_TRUE(rep.width_decreasing);
    EXPECT_GT(rep.mass_fraction.back(), 0.99);
    EXPECT_TRUE(rep.pass);
}
