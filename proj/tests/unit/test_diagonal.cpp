#include <gtest/gtest.h>

#include <random>

#include "sidlab/diagonal.hpp"
#include "sidlab/evolution.hpp"
#include "support.hpp"

using namespace sidlab;

namespace {

const SpectralGrid kOmega = make_grid({0.0, 3.0}, 7);
const SpectralGrid kO = make_grid({-1.0, 1.0}, 4, QuadratureRule::gauss_legendre, "o");

StateFunctional random_decohered(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return decohered_state(normalize(sidlab::testing::random_state(kOmega, kO, rng)));
}

}  // namespace

TEST(PointerBasis, RandomPsdKernelsDiagonalize) {
    for (std::uint64_t seed = 31; seed < 41; ++seed) {
        const auto rho = random_decohered(seed);
        const auto [U, D] = find_pointer_basis(rho);
        EXPECT_LT(unitarity_residual(U), 1e-10);
        EXPECT_LT(offdiagonal_mass(transform_state(rho, U)), 1e-10);
        const auto back = reconstruct_state(U, D);
        double err = 0.0;
        for (std::size_t i = 0; i < back.singular.data().size(); ++i)
            err = std::max(err, std::abs(back.singular.data()[i] - rho.singular.data()[i]));
        EXPECT_LT(err, 1e-10);
        EXPECT_NEAR(D.total(), 1.0, 1e-10);
    }
}

TEST(PointerBasis, EigenvaluesDescendPerOmega) {
    const auto [U, D] = find_pointer_basis(random_decohered(41));
    for (std::size_t w = 0; w < kOmega.size(); ++w)
        for (std::size_t p = 1; p < D.p.size(); ++p) EXPECT_GE(D.at(w, p - 1), D.at(w, p));
}

TEST(PointerBasis, IsDeterministic) {
    const auto rho = random_decohered(42);
    const auto a = find_pointer_basis(rho), b = find_pointer_basis(rho);
    EXPECT_EQ(a.first.U.data(), b.first.U.data());
    EXPECT_EQ(a.second.values, b.second.values);
}

TEST(PointerBasis, PairingIsPreservedByTheMap) {
    const auto rho = random_decohered(43);
    std::mt19937_64 rng(44);
    Observable A = sidlab::testing::random_observable(kOmega, kO, rng);
    for (std::size_t w = 0; w < kOmega.size(); ++w)
        for (std::size_t a = 0; a < kO.size(); ++a)
            for (std::size_t b = 0; b <= a; ++b) A.singular(w, b, a) = std::conj(A.singular(w, a, b));
    A.regular = Kernel4(kOmega.size(), kO.size());
    const auto [U, D] = find_pointer_basis(rho);
    const cplx lhs = pair(transform_state(rho, U), transform_observable(A, U));
    EXPECT_LT(std::abs(lhs - pair(rho, A)), 1e-11);
}

TEST(PointerBasis, DiagonalInputIsAlreadyDiagonal) {
    StateFunctional rho = zero_state(kOmega, kO);
    for (std::size_t w = 0; w < kOmega.size(); ++w)
        for (std::size_t k = 0; k < kO.size(); ++k) rho.singular(w, k, k) = (1.0 + k) / kO.weight(k);
    const auto [U, D] = find_pointer_basis(rho);
    EXPECT_LT(offdiagonal_mass(transform_state(rho, U)), 1e-12);
    // Descending order puts the largest diagonal entry first.
    EXPECT_NEAR(D.at(0, 0) * D.p.weight(0), 1.0 + kO.size() - 1, 1e-12);
}

TEST(PointerBasis, RejectsRegularPartAndNegativeKernels) {
    std::mt19937_64 rng(45);
    EXPECT_THROW(find_pointer_basis(sidlab::testing::random_state(kOmega, kO, rng)), std::invalid_argument);
    StateFunctional neg = zero_state(kOmega, kO);
    neg.singular(0, 0, 0) = -1.0;
    EXPECT_THROW(find_pointer_basis(neg), InvalidStateError);
}
