#pragma once

#include <cmath>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "errors.hpp"
#include "phase_space.hpp"
#include "poly_symbol.hpp"
#include "spectral.hpp"

namespace sidlab {

enum class ModelKind { free_translation, oscillator, two_oscillator };

inline const char* model_name(ModelKind k) {
    switch (k) {
        case ModelKind::free_translation: return "free_translation";
        case ModelKind::oscillator: return "oscillator";
        case ModelKind::two_oscillator: return "two_oscillator";
    }
    return "?";
}

inline ModelKind parse_model(const std::string& s) {
    if (s == "free_translation") return ModelKind::free_translation;
    if (s == "oscillator") return ModelKind::oscillator;
    if (s == "two_oscillator") return ModelKind::two_oscillator;
    throw std::invalid_argument("unknown model id: " + s);
}

/// Integrable reference model: classical symbols H, P_i and the discretization used to realize its kets.
struct ModelSpec {
    ModelKind kind = ModelKind::oscillator;
    PolySymbol H;
    std::vector<PolySymbol> P;
    std::size_t levels = 8;        ///< ω levels kept
    std::size_t chart_points = 64; ///< nodes per phase-space axis
    double box_length = 8.0;       ///< free translation only
    std::vector<double> hbar_sequence{1.0, 0.5, 0.25, 0.125, 0.0625};

    std::size_t dof() const { return H.dof(); }
    std::size_t extra_labels() const { return P.size(); }
    std::string name() const { return model_name(kind); }
};

inline ModelSpec free_translation_model(double box_length = 8.0, std::size_t levels = 32, std::size_t chart_points = 64) {
    if (!(box_length > 0.0)) throw std::invalid_argument("free_translation_model: box length must be positive");
    ModelSpec m;
    m.kind = ModelKind::free_translation;
    m.H = PolySymbol::p();
    m.levels = levels;
    m.chart_points = chart_points;
    m.box_length = box_length;
    return m;
}

inline ModelSpec oscillator_model(std::size_t levels = 8, std::size_t chart_points = 64) {
    ModelSpec m;
    m.kind = ModelKind::oscillator;
    m.H = (PolySymbol::q() * PolySymbol::q() + PolySymbol::p() * PolySymbol::p()) * cplx(0.5);
    m.levels = levels;
    m.chart_points = chart_points;
    return m;
}

inline ModelSpec two_oscillator_model(std::size_t levels = 6, std::size_t chart_points = 24) {
    ModelSpec m;
    m.kind = ModelKind::two_oscillator;
    const auto q1 = PolySymbol::q(0, 2), p1 = PolySymbol::p(0, 2), q2 = PolySymbol::q(1, 2), p2 = PolySymbol::p(1, 2);
    const PolySymbol H2 = (q2 * q2 + p2 * p2) * cplx(0.5);
    m.H = (q1 * q1 + p1 * p1) * cplx(0.5) + H2;
    m.P = {H2};
    m.levels = levels;
    m.chart_points = chart_points;
    return m;
}

/// Energy levels on the ω axis; weights are the level spacing.
inline SpectralGrid level_grid(const ModelSpec& m, double hbar) {
    if (!(hbar > 0.0)) throw std::invalid_argument("level_grid: hbar must be positive");
    if (m.levels < 2) throw std::invalid_argument("level_grid: need at least two levels");
    std::vector<double> nodes(m.levels), weights(m.levels);
    double spacing = hbar;
    for (std::size_t n = 0; n < m.levels; ++n) {
        switch (m.kind) {
            case ModelKind::free_translation:
                spacing = 2.0 * std::numbers::pi * hbar / m.box_length;
                nodes[n] = spacing * static_cast<double>(n);
                break;
            case ModelKind::oscillator: nodes[n] = hbar * (static_cast<double>(n) + 0.5); break;
            case ModelKind::two_oscillator: nodes[n] = hbar * (static_cast<double>(n) + 1.0); break;
        }
        weights[n] = spacing;
    }
    return lattice_grid(std::move(nodes), std::move(weights), "omega");
}

/// Grid of the extra label o: a single unit node for N = 0, the P eigenvalues otherwise.
inline SpectralGrid label_grid(const ModelSpec& m, double hbar) {
    if (m.kind != ModelKind::two_oscillator) return index_grid(1, "o");
    std::vector<double> nodes(m.levels), weights(m.levels, 1.0);
    for (std::size_t k = 0; k < m.levels; ++k) nodes[k] = hbar * (static_cast<double>(k) + 0.5);
    return lattice_grid(std::move(nodes), std::move(weights), "o");
}

/// Whether the basis ket |ω_w, o_k⟩ exists in the model.
inline bool ket_exists(const ModelSpec& m, std::size_t w, std::size_t k) {
    if (m.kind == ModelKind::two_oscillator) return k <= w;
    return k == 0;
}

/// Half-width of the square oscillator chart for which the midpoint s-lattice coincides with the q-lattice.
inline double oscillator_chart_extent(double hbar, std::size_t n) {
    return std::sqrt(std::numbers::pi * hbar * static_cast<double>(n) / 4.0);
}

// ---------------------------------------------------------------------------
// Closed-form oscillator functions (unit mass and frequency).

/// Normalized Hermite functions ψ_0..ψ_{n_max}(x).
inline std::vector<double> hermite_functions(std::size_t n_max, double x, double hbar) {
    std::vector<double> psi(n_max + 1);
    psi[0] = std::pow(std::numbers::pi * hbar, -0.25) * std::exp(-x * x / (2.0 * hbar));
    if (n_max >= 1) psi[1] = std::sqrt(2.0 / hbar) * x * psi[0];
    for (std::size_t n = 1; n < n_max; ++n) {
        const double nn = static_cast<double>(n);
        psi[n + 1] = std::sqrt(2.0 / (hbar * (nn + 1.0))) * x * psi[n] - std::sqrt(nn / (nn + 1.0)) * psi[n - 1];
    }
    return psi;
}

inline double laguerre(std::size_t n, double x) {
    if (n == 0) return 1.0;
    double a = 1.0, b = 1.0 - x;
    for (std::size_t k = 1; k < n; ++k) {
        const double kk = static_cast<double>(k);
        const double c = ((2.0 * kk + 1.0 - x) * b - kk * a) / (kk + 1.0);
        a = b;
        b = c;
    }
    return b;
}

/// Wigner function of |n⟩⟨n| as a function of H = (q²+p²)/2: ((−1)^n/πℏ) e^{−2H/ℏ} L_n(4H/ℏ).
inline double oscillator_wigner(std::size_t n, double H, double hbar) {
    const double sign = (n % 2 == 0) ? 1.0 : -1.0;
    return sign / (std::numbers::pi * hbar) * std::exp(-2.0 * H / hbar) * laguerre(n, 4.0 * H / hbar);
}

/// Symplectic Fourier transform of oscillator_wigner: e^{−ℏ|z|²/4} L_n(ℏ|z|²/2).
inline double oscillator_characteristic(std::size_t n, double z2, double hbar) {
    return std::exp(-hbar * z2 / 4.0) * laguerre(n, hbar * z2 / 2.0);
}

// ---------------------------------------------------------------------------
// Ket realizations.

/// Phase-space images of the level-basis dyads |a⟩⟨b| for a given ℏ.
class KetRealization {
public:
    virtual ~KetRealization() = default;

    const PhaseSpaceChart& chart() const { return chart_; }
    double hbar() const { return hbar_; }
    std::size_t basis_size() const { return basis_size_; }

    /// Wigner function of |a⟩⟨b|; diagonal entries integrate to one.
    virtual PhaseSpaceFunction state_wigner(std::size_t a, std::size_t b) const = 0;
    /// Weyl symbol of the operator |a⟩⟨b|.
    virtual PhaseSpaceFunction operator_symbol(std::size_t a, std::size_t b) const = 0;
    virtual bool supports_offdiagonal() const { return true; }

protected:
    KetRealization(PhaseSpaceChart chart, double hbar, std::size_t n) : chart_(std::move(chart)), hbar_(hbar), basis_size_(n) {}
    void check(std::size_t a, std::size_t b) const {
        if (a >= basis_size_ || b >= basis_size_) throw std::out_of_range("KetRealization: basis index out of range");
        if (a != b && !supports_offdiagonal())
            throw UnsupportedModelError("ket realization provides diagonal Wigner functions only");
    }

    PhaseSpaceChart chart_;
    double hbar_;
    std::size_t basis_size_;
};

/// Plane waves e^{ik_a q}/√L on a periodic box; p sits on the half-lattice cπℏ/L with unit weights.
class PlaneWaveKets final : public KetRealization {
public:
    PlaneWaveKets(double hbar, double L, std::size_t levels, std::size_t n_q)
        : KetRealization(make(hbar, L, levels, n_q), hbar, levels), L_(L) {}

    double k(std::size_t a) const { return 2.0 * std::numbers::pi * static_cast<double>(a) / L_; }

    PhaseSpaceFunction state_wigner(std::size_t a, std::size_t b) const override {
        return dyad(a, b, 1.0 / L_);
    }
    PhaseSpaceFunction operator_symbol(std::size_t a, std::size_t b) const override { return dyad(a, b, 1.0); }

private:
    static PhaseSpaceChart make(double hbar, double L, std::size_t levels, std::size_t n_q) {
        if (!(L > 0.0)) throw std::invalid_argument("PlaneWaveKets: box length must be positive");
        if (n_q <= 2 * (levels - 1))
            throw ResolutionError("PlaneWaveKets: q grid must exceed twice the largest level difference");
        std::vector<double> pn(2 * levels - 1), pw(2 * levels - 1, 1.0);
        for (std::size_t c = 0; c < pn.size(); ++c) pn[c] = static_cast<double>(c) * std::numbers::pi * hbar / L;
        return make_chart(make_grid({0.0, L}, n_q, QuadratureRule::periodic, "q"), lattice_grid(std::move(pn), std::move(pw), "p"),
                          "periodic box, p on the half-lattice of plane-wave momenta");
    }

    PhaseSpaceFunction dyad(std::size_t a, std::size_t b, double scale) const {
        check(a, b);
        PhaseSpaceFunction f = zero_function(chart_, hbar_);
        const std::size_t c = a + b;
        const double dk = k(a) - k(b);
        for (std::size_t i = 0; i < chart_.q_grids[0].size(); ++i)
            f.at(i, c) = scale * std::polar(1.0, dk * chart_.q_grids[0].node(i));
        return f;
    }

    double L_;
};

/// Hermite kets; Wigner functions by midpoint quadrature with the s-lattice matched to the q-lattice.
class OscillatorKets final : public KetRealization {
public:
    OscillatorKets(double hbar, std::size_t levels, std::size_t n)
        : KetRealization(make(hbar, n), hbar, levels) {
        const SpectralGrid& qg = chart_.q_grids[0];
        const double h = qg.spacing();
        // Kets sampled at q ± s/2 land on the half-spaced lattice x_j = q_0 + (j − n/2)·h.
        const std::size_t nx = 2 * n;
        x0_ = qg.front() - static_cast<double>(n / 2) * h;
        h_ = h;
        psi_.assign(nx, std::vector<double>());
        for (std::size_t j = 0; j < nx; ++j) psi_[j] = hermite_functions(levels - 1, x0_ + static_cast<double>(j) * h, hbar);
    }

    PhaseSpaceFunction state_wigner(std::size_t a, std::size_t b) const override {
        check(a, b);
        const SpectralGrid& qg = chart_.q_grids[0];
        const SpectralGrid& pg = chart_.p_grids[0];
        const std::size_t n = qg.size();
        const double ds = 2.0 * h_;
        PhaseSpaceFunction W = zero_function(chart_, hbar_);
        const double norm = ds / (2.0 * std::numbers::pi * hbar_);
        for (std::size_t i = 0; i < n; ++i) {
            const long centre = static_cast<long>(i + n / 2);
            std::vector<cplx> g(n);
            for (std::size_t t = 0; t < n; ++t) {
                const long k = static_cast<long>(t) - static_cast<long>(n / 2);
                const long ja = centre + k, jb = centre - k;
                if (ja < 0 || jb < 0 || ja >= static_cast<long>(psi_.size()) || jb >= static_cast<long>(psi_.size())) continue;
                g[t] = psi_[static_cast<std::size_t>(ja)][a] * psi_[static_cast<std::size_t>(jb)][b];
            }
            for (std::size_t l = 0; l < pg.size(); ++l) {
                cplx acc = 0.0;
                for (std::size_t t = 0; t < n; ++t) {
                    if (g[t] == cplx(0.0)) continue;
                    const double s = static_cast<double>(static_cast<long>(t) - static_cast<long>(n / 2)) * ds;
                    acc += g[t] * std::polar(1.0, -pg.node(l) * s / hbar_);
                }
                W.at(i, l) = norm * acc;
            }
        }
        return W;
    }

    PhaseSpaceFunction operator_symbol(std::size_t a, std::size_t b) const override {
        PhaseSpaceFunction f = state_wigner(a, b);
        for (auto& v : f.values) v *= 2.0 * std::numbers::pi * hbar_;
        return f;
    }

private:
    static PhaseSpaceChart make(double hbar, std::size_t n) {
        if (n < 8 || n % 2 != 0) throw std::invalid_argument("OscillatorKets: chart size must be even and at least 8");
        const double E = oscillator_chart_extent(hbar, n);
        return make_chart(make_grid({-E, E}, n, QuadratureRule::periodic, "q"), make_grid({-E, E}, n, QuadratureRule::periodic, "p"),
                          "square chart, midpoint lattice matched to the q grid");
    }

    double x0_ = 0.0, h_ = 0.0;
    std::vector<std::vector<double>> psi_;
};

/// Product kets |n₁⟩|n₂⟩ indexed by (level w = n₁+n₂, label k = n₂); diagonal Wigner functions only.
class TwoOscillatorKets final : public KetRealization {
public:
    TwoOscillatorKets(double hbar, std::size_t levels, std::size_t n)
        : KetRealization(make(hbar, levels, n), hbar, levels * levels), levels_(levels) {}

    bool supports_offdiagonal() const override { return false; }

    PhaseSpaceFunction state_wigner(std::size_t a, std::size_t b) const override {
        check(a, b);
        const std::size_t w = a / levels_, k = a % levels_;
        if (k > w) throw std::invalid_argument("TwoOscillatorKets: label exceeds level");
        const std::size_t n1 = w - k, n2 = k;
        return sample(
            chart_,
            [&](std::span<const double> phi) {
                const double H1 = 0.5 * (phi[0] * phi[0] + phi[2] * phi[2]);
                const double H2 = 0.5 * (phi[1] * phi[1] + phi[3] * phi[3]);
                return cplx(oscillator_wigner(n1, H1, hbar_) * oscillator_wigner(n2, H2, hbar_));
            },
            hbar_);
    }

    PhaseSpaceFunction operator_symbol(std::size_t a, std::size_t b) const override {
        PhaseSpaceFunction f = state_wigner(a, b);
        const double s = std::pow(2.0 * std::numbers::pi * hbar_, 2);
        for (auto& v : f.values) v *= s;
        return f;
    }

private:
    static PhaseSpaceChart make(double hbar, std::size_t levels, std::size_t n) {
        const double E = std::sqrt(2.0 * hbar * static_cast<double>(levels + 1)) + 4.0 * std::sqrt(hbar);
        auto g = [&](const char* lbl) { return make_grid({-E, E}, n, QuadratureRule::periodic, lbl); };
        return make_chart({g("q1"), g("q2")}, {g("p1"), g("p2")}, "product chart of two oscillators");
    }

    std::size_t levels_;
};

/// Flat basis index of |ω_w, o_k⟩ in a realization.
inline std::size_t basis_index(const ModelSpec& m, std::size_t w, std::size_t k) {
    return m.kind == ModelKind::two_oscillator ? w * m.levels + k : w;
}

inline std::unique_ptr<KetRealization> make_kets(const ModelSpec& m, double hbar) {
    switch (m.kind) {
        case ModelKind::free_translation:
            return std::make_unique<PlaneWaveKets>(hbar, m.box_length, m.levels, m.chart_points);
        case ModelKind::oscillator: return std::make_unique<OscillatorKets>(hbar, m.levels, m.chart_points);
        case ModelKind::two_oscillator: return std::make_unique<TwoOscillatorKets>(hbar, m.levels, m.chart_points);
    }
    throw UnsupportedModelError("make_kets: unknown model");
}

/// Chart on which classical densities of the model are sampled.
inline PhaseSpaceChart classical_chart(const ModelSpec& m, double omega_max, double margin, std::size_t n) {
    switch (m.kind) {
        case ModelKind::free_translation:
            return make_chart(make_grid({0.0, m.box_length}, n, QuadratureRule::periodic, "q"),
                              make_grid({-margin, omega_max + margin}, n, QuadratureRule::trapezoid, "p"), "box x momentum");
        case ModelKind::oscillator: {
            const double E = std::sqrt(2.0 * (omega_max + margin));
            return make_chart(make_grid({-E, E}, n, QuadratureRule::periodic, "q"),
                              make_grid({-E, E}, n, QuadratureRule::periodic, "p"), "square chart");
        }
        case ModelKind::two_oscillator: {
            const double E = std::sqrt(2.0 * (omega_max + margin));
            auto g = [&](const char* lbl) { return make_grid({-E, E}, n, QuadratureRule::periodic, lbl); };
            return make_chart({g("q1"), g("q2")}, {g("p1"), g("p2")}, "product chart");
        }
    }
    throw UnsupportedModelError("classical_chart: unknown model");
}

struct ModelCheck {
    double poisson_residual = 0.0;  ///< max |{H,P_i}_pb| on the chart
    bool symbols_hbar_independent = true;
    bool pass = true;
};

/// Verifies that the classical symbols Poisson-commute and carry no ℏ dependence.
inline ModelCheck check_model(const ModelSpec& m, const PhaseSpaceChart& chart) {
    ModelCheck c;
    for (const auto& P : m.P) {
        const PolySymbol pb = poisson_bracket(m.H, P);
        c.poisson_residual = std::max(c.poisson_residual, max_abs(sample(chart, pb, 1.0)));
    }
    auto symbol_at = [&](double h) { return sample(chart, m.H, h); };
    c.symbols_hbar_independent = !scan_hbar_dependence(symbol_at, 1.0).hbar_dependent;
    c.pass = c.poisson_residual <= 1e-8 && c.symbols_hbar_independent;
    return c;
}

}  // namespace sidlab
