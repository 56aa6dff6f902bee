#include <gtest/gtest.h>

#include <random>

#include "sidlab/evolution.hpp"
#include "support.hpp"

using namespace sidlab;

namespace {

const SpectralGrid kOmega = make_grid({0.0, 5.0}, 11);
const SpectralGrid kO = index_grid(2, "o");

double max_diff(const Kernel4& a, const Kernel4& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.data().size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
    return m;
}

}  // namespace

TEST(Evolution, GroupLawAndTimeZero) {
    std::mt19937_64 rng(21);
    const auto A = sidlab::testing::random_observable(kOmega, kO, rng);
    EXPECT_EQ(max_diff(evolve_observable(A, 0.0, 0.7).regular, A.regular), 0.0);
    const auto a = evolve_observable(evolve_observable(A, 0.4, 0.7), 1.1, 0.7);
    const auto b = evolve_observable(A, 1.5, 0.7);
    EXPECT_LT(max_diff(a.regular, b.regular), 1e-13);
}

TEST(Evolution, SingularSectorIsInvariant) {
    std::mt19937_64 rng(22);
    const auto rho = sidlab::testing::random_state(kOmega, kO, rng);
    const auto [AS, AR] = split(sidlab::testing::random_observable(kOmega, kO, rng));
    const cplx v0 = pair(rho, AS);
    for (double t : {0.3, 1.7, 12.0}) EXPECT_LT(std::abs(pair(evolve_state(rho, t, 1.0), AS) - v0), 1e-12);
}

TEST(Evolution, SchroedingerHeisenbergDuality) {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> T(0.0, 10.0);
    for (int k = 0; k < 20; ++k) {
        const auto rho = sidlab::testing::random_state(kOmega, kO, rng);
        const auto A = sidlab::testing::random_observable(kOmega, kO, rng);
        const double t = T(rng);
        const cplx s = pair(evolve_state(rho, t, 0.5), A);
        const cplx h = pair(rho, evolve_observable(A, t, 0.5));
        EXPECT_LT(std::abs(s - h), 1e-12 * std::max(1.0, std::abs(s)));
    }
}

TEST(Evolution, MeanValueSplitsIntoInvariantAndFluctuatingParts) {
    std::mt19937_64 rng(24);
    const auto rho = sidlab::testing::random_state(kOmega, kO, rng);
    const auto A = sidlab::testing::random_observable(kOmega, kO, rng);
    const auto mv = mean_value_parts(rho, A, 2.3, 1.0);
    EXPECT_LT(std::abs(mv.invariant - pair(decohered_state(rho), A)), 1e-12);
    EXPECT_LT(std::abs(mv.total() - pair(evolve_state(rho, 2.3, 1.0), A)), 1e-11);
}

TEST(Evolution, RejectsNonFiniteTimeAndNonPositiveHbar) {
    std::mt19937_64 rng(25);
    const auto A = sidlab::testing::random_observable(kOmega, kO, rng);
    EXPECT_THROW(evolve_observable(A, std::nan(""), 1.0), std::invalid_argument);
    EXPECT_THROW(evolve_observable(A, 1.0, 0.0), std::invalid_argument);
    EXPECT_THROW((EvolutionParams{1.0, {1.0, 0.5}}.validate()), std::invalid_argument);
}

TEST(Evolution, PreRevivalWindow) {
    const auto ts = pre_revival_times(kOmega, 1.0, 5);
    EXPECT_DOUBLE_EQ(ts.front(), 0.0);
    EXPECT_NEAR(ts.back(), std::numbers::pi / kOmega.spacing(), 1e-12);
}

TEST(Decoherence, GaussianKernelMatchesClosedFormDecay) {
    const sidlab::testing::DecaySetup d;
    const auto rho = d.state();
    const auto A = d.observable();
    const auto ts = pre_revival_times(d.omega(), d.hbar, 64);
    const auto rep = decoherence_time(rho, A, {d.hbar, ts}, 0.01);
    const double f0 = sidlab::testing::gaussian_decay_oracle(0.0, d.b, d.s, d.hbar);
    for (const auto& p : rep.fluct_trace) {
        const double o = sidlab::testing::gaussian_decay_oracle(p.t, d.b, d.s, d.hbar);
        EXPECT_LE(std::abs(p.modulus - o), 0.01 * o + 1e-12 * f0) << "t = " << p.t;
    }
    EXPECT_TRUE(rep.t_D.has_value());
    EXPECT_LT(std::abs(mean_value(rho, A, ts.back(), d.hbar) - pair(decohered_state(rho), A)), 1e-6);
}

TEST(Decoherence, HeuristicTimeTracksOracleThreshold) {
    const sidlab::testing::DecaySetup d;
    const auto ts = pre_revival_times(d.omega(), d.hbar, 256);
    const auto rep = decoherence_time(d.state(), d.observable(), {d.hbar, ts}, 0.01);
    // Oracle threshold: e^{−t²/4αℏ²} = ε.
    const double alpha = 1.0 / (4.0 * d.b * d.b) + 1.0 / (2.0 * d.s * d.s);
    const double t_eps = 2.0 * d.hbar * std::sqrt(alpha * std::log(100.0));
    ASSERT_TRUE(rep.t_D.has_value());
    EXPECT_NEAR(*rep.t_D, t_eps, 2.0 * (ts[1] - ts[0]));
}

TEST(Decoherence, NarrowBandKernelGivesCharacteristicEnergy) {
    // Coherences peaked at |ω − ω′| = E give E_char ≈ E.
    const sidlab::testing::DecaySetup d;
    const double E = 2.0, spread = 0.3;
    const auto g = [&](double x) { return std::exp(-(x - d.c) * (x - d.c) / (2 * d.b * d.b)); };
    const auto band = [&](double x) { return std::exp(-(std::abs(x) - E) * (std::abs(x) - E) / (2 * spread * spread)); };
    const auto rho = make_state(
        d.omega(), index_grid(1, "o"), [&](double w, double, double) { return cplx(g(w)); },
        [&](double w, double v, double, double) { return cplx(g(w) * g(v) * band(w - v)); });
    const auto ts = pre_revival_times(d.omega(), d.hbar, 64);
    const auto rep = decoherence_time(rho, d.observable(), {d.hbar, ts}, 0.01);
    ASSERT_TRUE(rep.E_char.has_value());
    EXPECT_NEAR(*rep.E_char, E, 0.05 * E);
}

TEST(Decoherence, NoRegularPartGivesZeroTime) {
    const sidlab::testing::DecaySetup d;
    StateFunctional rho = d.state();
    rho.regular = Kernel4(rho.omega.size(), rho.o.size());
    const auto rep = decoherence_time(rho, d.observable(), {1.0, pre_revival_times(rho.omega, 1.0, 8)}, 0.01);
    ASSERT_TRUE(rep.t_D.has_value());
    EXPECT_EQ(*rep.t_D, 0.0);
}

TEST(Decoherence, RejectsEpsilonOutsideUnitInterval) {
    const sidlab::testing::DecaySetup d;
    EXPECT_THROW(decoherence_time(d.state(), d.observable(), {1.0, {0.0}}, 1.5), std::invalid_argument);
}
