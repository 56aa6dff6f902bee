#include <gtest/gtest.h>

#include "sidlab/poly_symbol.hpp"

using namespace sidlab;

namespace {

const PolySymbol q = PolySymbol::q(), p = PolySymbol::p();
const PolySymbol one = PolySymbol::constant(1.0);

PolySymbol pow(const PolySymbol& x, int n) {
    PolySymbol out = one;
    for (int k = 0; k < n; ++k) out = out * x;
    return out;
}

double dist(const PolySymbol& a, const PolySymbol& b) { return (a - b).norm(); }

}  // namespace

TEST(StarProduct, CanonicalCommutatorIsExact) {
    for (double h : {1.0, 0.3, 1e-3}) {
        const PolySymbol c = star_product(q, p, h) - star_product(p, q, h);
        EXPECT_EQ(dist(c, PolySymbol::constant(cplx(0.0, h))), 0.0);
    }
    EXPECT_EQ(dist(star_product(q, p, 1.0), q * p + PolySymbol::constant(cplx(0.0, 0.5))), 0.0);
}

TEST(StarProduct, FrozenSecondOrderProduct) {
    // p² ⋆ q² = p²q² − 2iℏpq − ℏ²/2.
    const double h = 0.7;
    const PolySymbol expect = pow(p, 2) * pow(q, 2) + q * p * cplx(0.0, -2.0 * h) + PolySymbol::constant(-h * h / 2.0);
    EXPECT_LT(dist(star_product(pow(p, 2), pow(q, 2), h), expect), 1e-14);
}

TEST(StarProduct, HarmonicHamiltonianSquare) {
    // H ⋆ H − H² = −ℏ²/4 for H = (q² + p²)/2.
    const PolySymbol H = (pow(q, 2) + pow(p, 2)) * 0.5;
    for (double h : {1.0, 0.5, 0.125})
        EXPECT_LT(dist(star_product(H, H, h) - H * H, PolySymbol::constant(-h * h / 4.0)), 1e-14);
}

TEST(StarProduct, AssociativeOnPolynomials) {
    const PolySymbol f = pow(q, 2) + p, g = q * p + pow(p, 3), k = q + pow(p, 2) * q;
    const double h = 0.9;
    EXPECT_LT(dist(star_product(star_product(f, g, h), k, h), star_product(f, star_product(g, k, h), h)), 1e-12);
}

TEST(StarProduct, AgreesWithOperatorComposition) {
    const double h = 0.6;
    const PolySymbol f = pow(q, 2) * p + q, g = pow(p, 2) + q * p;
    const PolySymbol fg = star_product(f, g, h);
    GaussianPoly psi;
    psi.coeffs = {1.0, 0.3, -0.2};
    psi.a = 0.7;
    psi.b = cplx(0.1, 0.4);
    const GaussianPoly lhs = weyl_quantize(fg, h).apply(psi);
    const GaussianPoly rhs = weyl_quantize(f, h).apply(weyl_quantize(g, h).apply(psi));
    for (double x : {-1.3, -0.2, 0.0, 0.8, 2.1}) EXPECT_LT(std::abs(lhs(x) - rhs(x)), 1e-11 * (1.0 + std::abs(rhs(x))));
}

TEST(MoyalBracket, EqualsPoissonUpToDegreeTwo) {
    const std::vector<PolySymbol> quad = {one, q, p, pow(q, 2), q * p, pow(p, 2), pow(q, 2) * 3.0 + q * p - p};
    for (const auto& f : quad)
        for (const auto& g : quad) EXPECT_EQ(dist(moyal_bracket(f, g, 0.8), poisson_bracket(f, g)), 0.0);
}

TEST(MoyalBracket, DegreeThreeCorrectionTermByTerm) {
    // {q³, p³}_mb = 9q²p² − (ℏ²/24)·36 = 9q²p² − 3ℏ²/2.
    const auto terms = moyal_terms(pow(q, 3), pow(p, 3), 6);
    EXPECT_LT(dist(terms[1], pow(q, 2) * pow(p, 2) * 9.0), 1e-14);
    EXPECT_LT(dist(terms[3], PolySymbol::constant(-1.5)), 1e-14);
    for (std::size_t r : {0u, 2u, 4u, 5u, 6u}) EXPECT_TRUE(terms[r].is_zero(1e-14)) << "order " << r;
    // {q³, q p³}_mb = 9q³p² − (ℏ²/24)·6·6q.
    const auto t2 = moyal_terms(pow(q, 3), q * pow(p, 3), 6);
    EXPECT_LT(dist(t2[1], pow(q, 3) * pow(p, 2) * 9.0), 1e-14);
    EXPECT_LT(dist(t2[3], q * -1.5), 1e-14);
}

TEST(MoyalBracket, MatchesOperatorCommutator) {
    const double h = 0.45;
    const PolySymbol f = pow(q, 3) + p, g = pow(p, 3) + q * pow(p, 2);
    const PolySymbol mb = moyal_bracket(f, g, h);
    GaussianPoly psi;
    psi.coeffs = {0.5, -1.0, 0.25};
    psi.a = 0.9;
    const GaussianPoly fg = weyl_quantize(f, h).apply(weyl_quantize(g, h).apply(psi));
    const GaussianPoly gf = weyl_quantize(g, h).apply(weyl_quantize(f, h).apply(psi));
    const GaussianPoly m = weyl_quantize(mb, h).apply(psi);
    for (double x : {-1.0, 0.3, 1.4}) {
        const cplx comm = (fg(x) - gf(x)) / cplx(0.0, h);
        EXPECT_LT(std::abs(comm - m(x)), 1e-10 * (1.0 + std::abs(m(x))));
    }
}

TEST(PolySymbol, RejectsMismatchedDimensions) {
    EXPECT_THROW(star_product(q, PolySymbol::q(0, 2), 1.0), std::invalid_argument);
    EXPECT_THROW(moyal_bracket(q, p, 0.0), std::invalid_argument);
    EXPECT_THROW(PolySymbol::monomial({1, 0, 0}, 1.0), std::invalid_argument);
}
