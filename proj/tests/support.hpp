#pragma once

#include <cmath>
#include <numbers>
#include <random>
#include <span>
#include <vector>

#include "sidlab/algebra.hpp"
#include "sidlab/phase_space.hpp"

namespace sidlab::testing {

/// Random Hermitian positive kernel ρ(ω,o,o′) = Σ_k v_k v_k^† / (w_o w_o′)^{1/2} per ω, plus a Hermitian regular part.
inline StateFunctional random_state(const SpectralGrid& omega, const SpectralGrid& o, std::mt19937_64& rng,
                                    double regular_scale = 0.3) {
    std::normal_distribution<double> N(0.0, 1.0);
    const std::size_t no = o.size(), nw = omega.size();
    StateFunctional rho = zero_state(omega, o);
    for (std::size_t w = 0; w < nw; ++w) {
        Eigen::MatrixXcd B(no, no);
        for (std::size_t a = 0; a < no; ++a)
            for (std::size_t b = 0; b < no; ++b) B(a, b) = cplx(N(rng), N(rng));
        const Eigen::MatrixXcd M = B * B.adjoint();
        for (std::size_t a = 0; a < no; ++a)
            for (std::size_t b = 0; b < no; ++b)
                rho.singular(w, a, b) = M(a, b) / std::sqrt(o.weight(a) * o.weight(b));
    }
    for (std::size_t w = 0; w < nw; ++w)
        for (std::size_t v = 0; v <= w; ++v)
            for (std::size_t a = 0; a < no; ++a)
                for (std::size_t b = 0; b < no; ++b) {
                    const cplx z = regular_scale * cplx(N(rng), N(rng));
                    rho.regular(w, v, a, b) = z;
                    rho.regular(v, w, b, a) = std::conj(z);
                }
    for (std::size_t w = 0; w < nw; ++w)
        for (std::size_t a = 0; a < no; ++a) rho.regular(w, w, a, a) = rho.regular(w, w, a, a).real();
    return rho;
}

inline Observable random_observable(const SpectralGrid& omega, const SpectralGrid& o, std::mt19937_64& rng) {
    std::normal_distribution<double> N(0.0, 1.0);
    Observable A = zero_observable(omega, o);
    for (auto& z : A.singular.data()) z = cplx(N(rng), N(rng));
    for (auto& z : A.regular.data()) z = cplx(N(rng), N(rng));
    return A;
}

/// Gaussian e^{−Q(φ)} with centre (q0,p0), widths (a,b) and correlation c, all in units of √ℏ.
struct GaussianSymbol {
    double q0, p0, a, b, c;

    cplx operator()(std::span<const double> z, double hbar) const {
        const double r = std::sqrt(hbar);
        const double dq = z[0] / r - q0, dp = z[1] / r - p0;
        return std::exp(-dq * dq / (2 * a * a) - dp * dp / (2 * b * b) - c * dq * dp);
    }
};

inline const std::vector<GaussianSymbol>& gaussian_corpus() {
    static const std::vector<GaussianSymbol> corpus = {
        {0.0, 0.0, 1.0, 1.0, 0.0}, {1.0, -0.5, 0.8, 1.0, 0.3}, {-1.0, 1.0, 0.9, 0.7, -0.2},
        {0.5, 0.5, 1.0, 1.0, 0.4}, {0.0, 0.0, 0.6, 1.4, 0.0},
    };
    return corpus;
}

/// Position grid whose matched chart holds the corpus: half-width √(πℏn/4) in both q and p.
inline SpectralGrid corpus_grid(double hbar, std::size_t n = 64) {
    const double X = std::sqrt(std::numbers::pi * hbar * static_cast<double>(n) / 4.0);
    return make_grid({-X, X}, n, QuadratureRule::trapezoid, "x");
}

/// |∫∫ g(ω)g(ω′) e^{−(ω−ω′)²/2s²} e^{i(ω−ω′)t/ℏ} dω dω′| for g = e^{−(ω−c)²/2b²} on the real line.
inline double gaussian_decay_oracle(double t, double b, double s, double hbar) {
    const double alpha = 1.0 / (4.0 * b * b) + 1.0 / (2.0 * s * s);
    return std::numbers::pi * b / std::sqrt(alpha) * std::exp(-t * t / (4.0 * alpha * hbar * hbar));
}

/// State and observable of the decay oracle: ρ_R as above on the diagonal of o, A_R = 1.
struct DecaySetup {
    double lo = 0.0, hi = 10.0, c = 5.0, b = 1.0, s = 0.5, hbar = 1.0;
    std::size_t n = 64;

    SpectralGrid omega() const { return make_grid({lo, hi}, n); }

    StateFunctional state() const {
        const auto g = [&](double x) { return std::exp(-(x - c) * (x - c) / (2 * b * b)); };
        return make_state(
            omega(), index_grid(1, "o"), [&](double w, double, double) { return cplx(g(w)); },
            [&](double w, double v, double, double) { return cplx(g(w) * g(v) * std::exp(-(w - v) * (w - v) / (2 * s * s))); });
    }

    Observable observable() const {
        return make_observable(
            omega(), index_grid(1, "o"), [](double w, double, double) { return cplx(w); },
            [](double, double, double, double) { return cplx(1.0); });
    }
};

}  // namespace sidlab::testing
