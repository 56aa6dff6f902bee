#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "algebra.hpp"
#include "diagonal.hpp"
#include "errors.hpp"
#include "evolution.hpp"
#include "interp.hpp"
#include "models.hpp"
#include "phase_space.hpp"

namespace sidlab {

// ---------------------------------------------------------------------------
// Level-basis matrices.

/// Kernels written as matrices in the ket basis of the model, so that (ρ|A) = Tr ρ̂_S Â_S + Tr ρ̂_R Â_R.
struct LevelMatrices {
    Eigen::MatrixXcd rho_S, rho_R, A_S, A_R;
    std::vector<double> energies;
};

namespace detail {

inline void require_model_grids(const ModelSpec& m, const SpectralGrid& omega, const SpectralGrid& o, double hbar) {
    if (!omega.compatible(level_grid(m, hbar)) || !o.compatible(label_grid(m, hbar)))
        throw std::invalid_argument("kernels are not sampled on the level grid of model '" + m.name() + "'");
}

}  // namespace detail

inline LevelMatrices level_matrices(const StateFunctional& rho, const Observable& A, const ModelSpec& m, double hbar) {
    if (rho.form != SingularForm::grid_kernel)
        throw std::invalid_argument("level_matrices: point-mass states have no level-basis matrix");
    detail::require_model_grids(m, rho.omega, rho.o, hbar);
    detail::require_model_grids(m, A.omega, A.o, hbar);
    const SpectralGrid& om = rho.omega;
    const SpectralGrid& o = rho.o;
    const std::size_t nb = m.kind == ModelKind::two_oscillator ? m.levels * m.levels : m.levels;
    LevelMatrices L;
    L.rho_S = L.rho_R = L.A_S = L.A_R = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(nb), static_cast<Eigen::Index>(nb));
    L.energies.assign(nb, 0.0);
    const bool has_regular = rho.regular.n_omega() > 0;
    auto idx = [&](std::size_t w, std::size_t k) { return static_cast<Eigen::Index>(basis_index(m, w, k)); };
    for (std::size_t w = 0; w < om.size(); ++w)
        for (std::size_t a = 0; a < o.size(); ++a) {
            if (!ket_exists(m, w, a)) continue;
            L.energies[static_cast<std::size_t>(idx(w, a))] = om.node(w);
            for (std::size_t b = 0; b < o.size(); ++b) {
                if (!ket_exists(m, w, b)) continue;
                const double sw = std::sqrt(o.weight(a) * o.weight(b));
                L.rho_S(idx(w, b), idx(w, a)) = om.weight(w) * sw * rho.singular(w, a, b);
                L.A_S(idx(w, a), idx(w, b)) = sw * A.singular(w, a, b);
                for (std::size_t v = 0; v < om.size(); ++v) {
                    if (!ket_exists(m, v, b)) continue;
                    const double s4 = std::sqrt(om.weight(w) * om.weight(v) * o.weight(a) * o.weight(b));
                    if (has_regular) L.rho_R(idx(v, b), idx(w, a)) = s4 * rho.regular(w, v, a, b);
                    L.A_R(idx(w, a), idx(v, b)) = s4 * A.regular(w, v, a, b);
                }
            }
        }
    return L;
}

namespace detail {

inline PhaseSpaceFunction expand(const KetRealization& kets, const Eigen::MatrixXcd& M, bool operator_side) {
    PhaseSpaceFunction out = zero_function(kets.chart(), kets.hbar());
    for (Eigen::Index a = 0; a < M.rows(); ++a)
        for (Eigen::Index b = 0; b < M.cols(); ++b) {
            const cplx c = M(a, b);
            if (std::abs(c) == 0.0) continue;
            const PhaseSpaceFunction f = operator_side
                                             ? kets.operator_symbol(static_cast<std::size_t>(a), static_cast<std::size_t>(b))
                                             : kets.state_wigner(static_cast<std::size_t>(a), static_cast<std::size_t>(b));
            for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] += c * f.values[i];
        }
    return out;
}

}  // namespace detail

/// Wigner function of the singular sector of ρ; its phase-space pairing with observable symbols reproduces (ρ|A_S).
inline PhaseSpaceFunction state_symbol(const StateFunctional& rho, const ModelSpec& m, double hbar) {
    const Observable zero = zero_observable(rho.omega, rho.o);
    const LevelMatrices L = level_matrices(rho, zero, m, hbar);
    const auto kets = make_kets(m, hbar);
    return detail::expand(*kets, L.rho_S, false);
}

/// Weyl symbol of the singular or regular sector of an observable.
inline PhaseSpaceFunction observable_symbol(const Observable& A, const ModelSpec& m, double hbar, bool regular_sector = false) {
    const StateFunctional zero = zero_state(A.omega, A.o);
    const LevelMatrices L = level_matrices(zero, A, m, hbar);
    const auto kets = make_kets(m, hbar);
    return detail::expand(*kets, regular_sector ? L.A_R : L.A_S, true);
}

// ---------------------------------------------------------------------------
// Evolution on phase space.

struct PhaseSpaceEvolution {
    std::vector<double> times;
    std::vector<cplx> quantum;      ///< (ρ|A(t)) from the kernel pairing
    std::vector<cplx> phase_space;  ///< ∫ ρ(φ,t) A(φ) dφ
    cplx invariant_quantum = 0.0;   ///< (ρ_*|A)
    cplx invariant_phase_space = 0.0;
    double max_route_residual = 0.0;
    double limit_residual = 0.0;    ///< |invariant_phase_space − (ρ_*|A)|
    double end_residual = 0.0;      ///< |phase-space trace at the last time − invariant term|
};

inline PhaseSpaceEvolution phase_space_evolution(const StateFunctional& rho, const Observable& A, const ModelSpec& m,
                                                 const std::vector<double>& times, double hbar) {
    EvolutionParams{hbar, times}.validate();
    if (m.kind == ModelKind::two_oscillator)
        throw UnsupportedModelError("phase_space_evolution: model provides diagonal Wigner functions only");
    const LevelMatrices L = level_matrices(rho, A, m, hbar);
    const auto kets = make_kets(m, hbar);

    PhaseSpaceEvolution out;
    out.times = times;
    out.invariant_quantum = pair(decohered_state(rho), A);

    const PhaseSpaceFunction W_S = detail::expand(*kets, L.rho_S, false);
    const PhaseSpaceFunction A_S = detail::expand(*kets, L.A_S, true);
    out.invariant_phase_space = phase_space_pair(W_S, A_S);

    // I_nm = ∫ W[|n⟩⟨m|] symb A_R dφ for every populated coherence.
    const PhaseSpaceFunction A_R = detail::expand(*kets, L.A_R, true);
    const auto nb = L.rho_R.rows();
    Eigen::MatrixXcd I = Eigen::MatrixXcd::Zero(nb, nb);
    for (Eigen::Index n = 0; n < nb; ++n)
        for (Eigen::Index k = 0; k < nb; ++k)
            if (std::abs(L.rho_R(n, k)) > 0.0)
                I(n, k) = phase_space_pair(kets->state_wigner(static_cast<std::size_t>(n), static_cast<std::size_t>(k)), A_R);

    for (double t : times) {
        out.quantum.push_back(mean_value(rho, A, t, hbar));
        cplx fl = 0.0;
        for (Eigen::Index n = 0; n < nb; ++n)
            for (Eigen::Index k = 0; k < nb; ++k) {
                const cplx r = L.rho_R(n, k);
                if (std::abs(r) == 0.0) continue;
                const double dE = L.energies[static_cast<std::size_t>(n)] - L.energies[static_cast<std::size_t>(k)];
                fl += r * std::polar(1.0, -dE * t / hbar) * I(n, k);
            }
        out.phase_space.push_back(out.invariant_phase_space + fl);
        out.max_route_residual = std::max(out.max_route_residual, std::abs(out.phase_space.back() - out.quantum.back()));
    }
    out.limit_residual = std::abs(out.invariant_phase_space - out.invariant_quantum);
    if (!out.phase_space.empty()) out.end_residual = std::abs(out.phase_space.back() - out.invariant_phase_space);
    return out;
}

// ---------------------------------------------------------------------------
// Invariant volume C(H,P).

struct VolumeEstimate {
    double volume = 0.0;       ///< band volume divided by the band widths
    double band_volume = 0.0;
    std::size_t hits = 0;
    double sigma = 0.0;
};

/// Volume of {|H−ω|<σ, |P_i−p_i|<σ} on a supersampled chart, divided by (2σ)^{N+1}.
inline VolumeEstimate invariant_volume(const ModelSpec& m, double omega, const std::vector<double>& p, double sigma,
                                       const PhaseSpaceChart& chart, std::size_t supersample = 8) {
    if (!(sigma > 0.0)) throw std::invalid_argument("invariant_volume: sigma must be positive");
    if (p.size() != m.P.size()) throw std::invalid_argument("invariant_volume: one p value per extra label required");
    if (chart.dof() != m.dof()) throw std::invalid_argument("invariant_volume: chart dimension differs from the model");
    if (supersample == 0) throw std::invalid_argument("invariant_volume: supersample must be positive");
    const std::size_t D = chart.axes();
    std::vector<double> lo(D), step(D);
    std::vector<std::size_t> count(D);
    double cell = 1.0;
    for (std::size_t k = 0; k < D; ++k) {
        const Interval s = chart.axis(k).support();
        count[k] = chart.axis(k).size() * supersample;
        step[k] = s.length() / static_cast<double>(count[k]);
        lo[k] = s.lo;
        cell *= step[k];
    }
    std::vector<std::size_t> idx(D, 0);
    std::vector<double> phi(D);
    VolumeEstimate est;
    est.sigma = sigma;
    for (;;) {
        for (std::size_t k = 0; k < D; ++k) phi[k] = lo[k] + (static_cast<double>(idx[k]) + 0.5) * step[k];
        bool in = std::abs(m.H.evaluate(phi).real() - omega) < sigma;
        for (std::size_t i = 0; in && i < m.P.size(); ++i) in = std::abs(m.P[i].evaluate(phi).real() - p[i]) < sigma;
        if (in) ++est.hits;
        std::size_t k = D;
        while (k-- > 0) {
            if (++idx[k] < count[k]) break;
            idx[k] = 0;
        }
        if (k == static_cast<std::size_t>(-1)) break;
    }
    if (est.hits == 0) throw EmptyLevelSetError("invariant_volume: no chart points in the level band");
    est.band_volume = static_cast<double>(est.hits) * cell;
    est.volume = est.band_volume / std::pow(2.0 * sigma, static_cast<double>(m.P.size() + 1));
    return est;
}

// ---------------------------------------------------------------------------
// Eigen-symbol sharpening.

struct SharpeningOptions {
    double width0 = 0.5;  ///< spectral window Δω at ℏ = hbar0
    double hbar0 = 1.0;
    double gamma = 0.5;   ///< Δω(ℏ) = width0·(ℏ/hbar0)^γ
    double band = 3.0;    ///< band half-width in units of Δω
};

struct SharpeningReport {
    double omega = 0.0;
    std::vector<double> hbars;
    std::vector<double> windows;
    std::vector<double> mass_fraction;
    std::vector<double> width;  ///< FWHM-equivalent width of the H marginal
    bool mass_monotone = false;
    bool width_decreasing = false;
    bool pass = false;
};

/// Symbol of a Gaussian spectral window around ω for each ℏ; measures concentration on the level set H = ω.
inline SharpeningReport eigen_symbol_limit(const ModelSpec& m, double omega, const std::vector<double>& hbars,
                                           const SharpeningOptions& opt = {}) {
    if (m.kind != ModelKind::free_translation)
        throw UnsupportedModelError("eigen_symbol_limit: exact kets are available for the free-translation model only");
    if (hbars.empty()) throw std::invalid_argument("eigen_symbol_limit: empty hbar sequence");
    SharpeningReport rep;
    rep.omega = omega;
    for (double hbar : hbars) {
        if (!(hbar > 0.0)) throw std::invalid_argument("eigen_symbol_limit: hbar must be positive");
        const double dw = opt.width0 * std::pow(hbar / opt.hbar0, opt.gamma);
        const double spacing = 2.0 * std::numbers::pi * hbar / m.box_length;
        const auto top = static_cast<std::size_t>(std::ceil((omega + 10.0 * dw) / spacing));
        const std::size_t levels = top + 2;
        const PlaneWaveKets kets(hbar, m.box_length, levels, 2 * levels);
        PhaseSpaceFunction W = zero_function(kets.chart(), hbar);
        double gsum = 0.0;
        for (std::size_t a = 0; a < levels; ++a) {
            const double g = std::exp(-std::pow(spacing * static_cast<double>(a) - omega, 2) / (2.0 * dw * dw));
            if (g < 1e-300) continue;
            gsum += g;
            const PhaseSpaceFunction Wa = kets.state_wigner(a, a);
            for (std::size_t i = 0; i < W.values.size(); ++i) W.values[i] += g * Wa.values[i];
        }
        for (auto& v : W.values) v /= gsum;

        const PhaseSpaceChart& ch = kets.chart();
        double total = 0.0, inside = 0.0, m1 = 0.0, m2 = 0.0;
        std::vector<double> phi;
        for (std::size_t i = 0; i < ch.size(); ++i) {
            ch.point(i, phi);
            const double mass = (W.values[i] * ch.cell_weight(i)).real();
            const double H = m.H.evaluate(phi).real();
            total += mass;
            m1 += mass * H;
            m2 += mass * H * H;
            if (std::abs(H - omega) < opt.band * dw) inside += mass;
        }
        const double mean = m1 / total;
        rep.hbars.push_back(hbar);
        rep.windows.push_back(dw);
        rep.mass_fraction.push_back(inside / total);
        rep.width.push_back(2.0 * std::sqrt(2.0 * std::log(2.0)) * std::sqrt(std::max(0.0, m2 / total - mean * mean)));
    }
    rep.mass_monotone = true;
    rep.width_decreasing = true;
    for (std::size_t i = 1; i < rep.hbars.size(); ++i) {
        if (rep.mass_fraction[i] < rep.mass_fraction[i - 1] - 0.02) rep.mass_monotone = false;
        if (!(rep.width[i] < rep.width[i - 1])) rep.width_decreasing = false;
    }
    rep.pass = rep.mass_monotone && rep.width_decreasing && rep.mass_fraction.front() <= rep.mass_fraction.back() &&
               rep.mass_fraction.back() > 0.99;
    return rep;
}

// ---------------------------------------------------------------------------
// Classical distribution.

struct RidgeTerm {
    double omega = 0.0;
    std::vector<double> p;
    double weight = 0.0;  ///< w_ω w_p ρ(ω,p)
    double volume = 0.0;  ///< C for this ridge, ∫ 𝒩_σ(H−ω) Π 𝒩_σ(P_i−p_i) dφ on the chart
};

struct ClassicalDistribution {
    PhaseSpaceChart chart;
    std::vector<double> values;
    double sigma = 0.0;
    std::vector<RidgeTerm> terms;
    bool volume_constant = false;  ///< ridge volumes agree within 1%
    double min_value = 0.0;
    double integral = 0.0;
};

inline double gaussian_delta(double x, double sigma) {
    return std::exp(-0.5 * x * x / (sigma * sigma)) / (sigma * std::sqrt(2.0 * std::numbers::pi));
}

namespace detail {

/// Largest change of f between neighbouring chart nodes among nodes where `mask` holds.
template <class F, class Mask>
double max_local_increment(const PhaseSpaceChart& chart, F&& f, Mask&& mask) {
    std::vector<std::size_t> idx;
    double inc = 0.0;
    std::vector<double> vals(chart.size());
    std::vector<double> phi;
    for (std::size_t i = 0; i < chart.size(); ++i) {
        chart.point(i, phi);
        vals[i] = f(phi);
    }
    for (std::size_t i = 0; i < chart.size(); ++i) {
        if (!mask(vals[i])) continue;
        chart.unflatten(i, idx);
        for (std::size_t k = 0; k < chart.axes(); ++k)
            if (idx[k] + 1 < chart.axis(k).size()) inc = std::max(inc, std::abs(vals[i + chart.stride(k)] - vals[i]));
    }
    return inc;
}

}  // namespace detail

/// ρ_c(φ) = Σ w_ω w_p ρ(ω,p) 𝒩_σ(H(φ)−ω) Π 𝒩_σ(P_i(φ)−p_i) / C_{ω,p}, each ridge divided by its own chart volume.
inline ClassicalDistribution classical_distribution(const DiagonalState& diag, const ModelSpec& m, double sigma,
                                                    const PhaseSpaceChart& chart) {
    if (!(sigma > 0.0)) throw std::invalid_argument("classical_distribution: sigma must be positive");
    if (chart.dof() != m.dof()) throw std::invalid_argument("classical_distribution: chart dimension differs from the model");
    if (std::abs(diag.total() - 1.0) > 1e-8) throw std::invalid_argument("classical_distribution: diagonal state is not normalized");
    const std::size_t n = chart.size();
    std::vector<double> Hv(n);
    std::vector<std::vector<double>> Pv(m.P.size(), std::vector<double>(n));
    std::vector<double> phi;
    for (std::size_t i = 0; i < n; ++i) {
        chart.point(i, phi);
        Hv[i] = m.H.evaluate(phi).real();
        for (std::size_t k = 0; k < m.P.size(); ++k) Pv[k][i] = m.P[k].evaluate(phi).real();
    }

    ClassicalDistribution out{chart, std::vector<double>(n, 0.0), sigma, {}, false, 0.0, 0.0};
    for (std::size_t w = 0; w < diag.omega.size(); ++w)
        for (std::size_t p = 0; p < diag.p.size(); ++p) {
            const double c = diag.omega.weight(w) * diag.p.weight(p) * diag.at(w, p);
            if (c <= 0.0) continue;
            RidgeTerm t;
            t.omega = diag.omega.node(w);
            t.weight = c;
            if (!m.P.empty()) t.p = {diag.label(w, p)};
            if (t.p.size() != m.P.size()) throw std::invalid_argument("classical_distribution: label count differs from the model");

            const double inc = detail::max_local_increment(
                chart, [&](const std::vector<double>& x) { return m.H.evaluate(x).real(); },
                [&](double h) { return std::abs(h - t.omega) < 4.0 * sigma; });
            if (sigma < inc)
                throw ResolutionError("classical_distribution: sigma " + fmt_num(sigma) +
                                      " is below the local H increment " + fmt_num(inc) + " of the chart");

            std::vector<double> ridge(n);
            double C = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                double r = gaussian_delta(Hv[i] - t.omega, sigma);
                for (std::size_t k = 0; k < m.P.size(); ++k) r *= gaussian_delta(Pv[k][i] - t.p[k], sigma);
                ridge[i] = r;
                C += r * chart.cell_weight(i);
            }
            if (!(C > 0.0)) throw EmptyLevelSetError("classical_distribution: ridge has no support on the chart");
            t.volume = C;
            for (std::size_t i = 0; i < n; ++i) out.values[i] += c * ridge[i] / C;
            out.terms.push_back(std::move(t));
        }
    if (out.terms.empty()) throw DegenerateStateError("classical_distribution: diagonal state carries no mass");

    double cmin = out.terms.front().volume, cmax = cmin;
    for (const auto& t : out.terms) {
        cmin = std::min(cmin, t.volume);
        cmax = std::max(cmax, t.volume);
    }
    out.volume_constant = (cmax - cmin) <= 0.01 * cmax;
    out.min_value = *std::min_element(out.values.begin(), out.values.end());
    for (std::size_t i = 0; i < n; ++i) out.integral += out.values[i] * chart.cell_weight(i);
    return out;
}

/// Mass of ρ_c within |H−ω| < halfwidth.
inline double band_mass(const ClassicalDistribution& rc, const ModelSpec& m, double omega, double halfwidth) {
    double s = 0.0;
    std::vector<double> phi;
    for (std::size_t i = 0; i < rc.values.size(); ++i) {
        rc.chart.point(i, phi);
        if (std::abs(m.H.evaluate(phi).real() - omega) < halfwidth) s += rc.values[i] * rc.chart.cell_weight(i);
    }
    return s;
}

// ---------------------------------------------------------------------------
// Interpolation on charts.

/// Tensor 6-point Lagrange interpolation of chart samples at φ.
inline double interpolate(const PhaseSpaceChart& chart, const std::vector<double>& values, const std::vector<double>& phi) {
    const std::size_t D = chart.axes();
    if (phi.size() != D) throw std::invalid_argument("interpolate: point dimension differs from the chart");
    std::vector<Stencil<6>> st(D);
    for (std::size_t k = 0; k < D; ++k) {
        const SpectralGrid& g = chart.axis(k);
        const double tol = 1e-12 * std::max(1.0, std::abs(phi[k]));
        if (phi[k] < g.front() - tol || phi[k] > g.back() + tol)
            throw OutOfDomainError("interpolate: point leaves the chart on axis '" + g.label() + "'");
        st[k] = lagrange_stencil<6>(g, phi[k]);
    }
    std::vector<std::size_t> t(D, 0);
    double acc = 0.0;
    for (;;) {
        double w = 1.0;
        std::size_t flat = 0;
        for (std::size_t k = 0; k < D; ++k) {
            w *= st[k].w[t[k]];
            flat += (st[k].start + t[k]) * chart.stride(k);
        }
        acc += w * values[flat];
        std::size_t k = D;
        while (k-- > 0) {
            if (++t[k] < st[k].count) break;
            t[k] = 0;
        }
        if (k == static_cast<std::size_t>(-1)) break;
    }
    return acc;
}

// ---------------------------------------------------------------------------
// Hamiltonian flow.

struct Trajectory {
    std::vector<double> phi0;
    std::vector<double> times;
    std::vector<std::vector<double>> points;
    std::string integrator;
    double step = 0.0;
    double max_drift = 0.0;
};

namespace detail {

inline void check_drift(Trajectory& tr, double H0, double H) {
    const double drift = std::abs(H - H0);
    tr.max_drift = std::max(tr.max_drift, drift);
    if (drift > 1e-6 * std::abs(H0) + 1e-9)
        throw IntegratorError("hamiltonian_flow: energy drift " + fmt_num(drift) + " exceeds the bound", drift);
}

inline Trajectory start_trajectory(const std::vector<double>& phi0, double T, std::size_t steps, std::size_t axes) {
    if (phi0.size() != axes) throw std::invalid_argument("hamiltonian_flow: initial point dimension differs from H");
    if (!(T >= 0.0) || !std::isfinite(T)) throw std::invalid_argument("hamiltonian_flow: T must be finite and non-negative");
    if (T > 0.0 && steps == 0) throw std::invalid_argument("hamiltonian_flow: need at least one step");
    Trajectory tr;
    tr.phi0 = phi0;
    tr.times.push_back(0.0);
    tr.points.push_back(phi0);
    tr.step = T > 0.0 ? T / static_cast<double>(steps) : 0.0;
    return tr;
}

/// Implicit midpoint step φ' = φ + dt·J∇H((φ+φ')/2) by fixed-point iteration.
template <class Grad>
std::vector<double> midpoint_step(const std::vector<double>& x, double dt, Grad&& grad) {
    const std::size_t n = x.size() / 2;
    std::vector<double> y = x, mid(x.size()), g;
    for (int it = 0; it < 100; ++it) {
        for (std::size_t k = 0; k < x.size(); ++k) mid[k] = 0.5 * (x[k] + y[k]);
        g = grad(mid);
        double change = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double qn = x[i] + dt * g[n + i];
            const double pn = x[n + i] - dt * g[i];
            change = std::max({change, std::abs(qn - y[i]), std::abs(pn - y[n + i])});
            y[i] = qn;
            y[n + i] = pn;
        }
        if (change <= 1e-15 * (1.0 + std::abs(y[0]))) break;
    }
    return y;
}

}  // namespace detail

/// Integrates Hamilton's equations for a polynomial H: leapfrog when H = T(p) + V(q), implicit midpoint otherwise.
inline Trajectory hamiltonian_flow(const PolySymbol& H, const std::vector<double>& phi0, double T, std::size_t steps) {
    const std::size_t n = H.dof();
    Trajectory tr = detail::start_trajectory(phi0, T, steps, 2 * n);
    if (T == 0.0) {
        tr.integrator = "none";
        return tr;
    }
    std::vector<PolySymbol> dH(2 * n);
    for (std::size_t k = 0; k < 2 * n; ++k) dH[k] = H.derivative(k);
    auto grad = [&](const std::vector<double>& x) {
        std::vector<double> g(2 * n);
        for (std::size_t k = 0; k < 2 * n; ++k) g[k] = dH[k].evaluate(x).real();
        return g;
    };
    const double H0 = H.evaluate(phi0).real();
    const double dt = tr.step;
    std::vector<double> x = phi0;
    const bool sep = H.separable();
    tr.integrator = sep ? "leapfrog" : "implicit_midpoint";
    for (std::size_t s = 1; s <= steps; ++s) {
        if (sep) {
            auto g = grad(x);
            for (std::size_t i = 0; i < n; ++i) x[n + i] -= 0.5 * dt * g[i];
            g = grad(x);
            for (std::size_t i = 0; i < n; ++i) x[i] += dt * g[n + i];
            g = grad(x);
            for (std::size_t i = 0; i < n; ++i) x[n + i] -= 0.5 * dt * g[i];
        } else {
            x = detail::midpoint_step(x, dt, grad);
        }
        detail::check_drift(tr, H0, H.evaluate(x).real());
        tr.times.push_back(dt * static_cast<double>(s));
        tr.points.push_back(x);
    }
    return tr;
}

/// Flow of a sampled H on a periodic one-degree-of-freedom chart: spectral gradient, 6-point interpolation, implicit midpoint.
inline Trajectory hamiltonian_flow(const PhaseSpaceFunction& H, const std::vector<double>& phi0, double T, std::size_t steps) {
    if (H.chart.dof() != 1) throw std::invalid_argument("hamiltonian_flow: grid symbols support one degree of freedom");
    Trajectory tr = detail::start_trajectory(phi0, T, steps, 2);
    if (T == 0.0) {
        tr.integrator = "none";
        return tr;
    }
    const SpectralCalculus calc(H.chart, 1);
    const Eigen::MatrixXcd V = calc.as_matrix(H);
    const Eigen::MatrixXcd Gq = calc.derivative(V, 1, 0), Gp = calc.derivative(V, 0, 1);
    std::vector<double> h(H.values.size()), gq(h.size()), gp(h.size());
    for (Eigen::Index i = 0; i < V.rows(); ++i)
        for (Eigen::Index j = 0; j < V.cols(); ++j) {
            const auto k = static_cast<std::size_t>(i * V.cols() + j);
            h[k] = V(i, j).real();
            gq[k] = Gq(i, j).real();
            gp[k] = Gp(i, j).real();
        }
    auto grad = [&](const std::vector<double>& x) {
        return std::vector<double>{interpolate(H.chart, gq, x), interpolate(H.chart, gp, x)};
    };
    const double H0 = interpolate(H.chart, h, phi0);
    tr.integrator = "implicit_midpoint";
    std::vector<double> x = phi0;
    for (std::size_t s = 1; s <= steps; ++s) {
        x = detail::midpoint_step(x, tr.step, grad);
        detail::check_drift(tr, H0, interpolate(H.chart, h, x));
        tr.times.push_back(tr.step * static_cast<double>(s));
        tr.points.push_back(x);
    }
    return tr;
}

inline Trajectory hamiltonian_flow(const ModelSpec& m, const std::vector<double>& phi0, double T, std::size_t steps) {
    return hamiltonian_flow(m.H, phi0, T, steps);
}

struct ConstancyReport {
    std::vector<double> values;
    double mean = 0.0;
    double max_relative_deviation = 0.0;
    bool pass = false;
};

/// ρ_c along a trajectory; constant of motion if the relative deviation from the mean stays below `tol`.
inline ConstancyReport constancy_check(const ClassicalDistribution& rc, const Trajectory& tr, double tol = 1e-3) {
    ConstancyReport rep;
    for (const auto& x : tr.points) rep.values.push_back(interpolate(rc.chart, rc.values, x));
    double s = 0.0;
    for (double v : rep.values) s += v;
    rep.mean = s / static_cast<double>(rep.values.size());
    for (double v : rep.values)
        rep.max_relative_deviation = std::max(rep.max_relative_deviation, std::abs(v - rep.mean) / std::max(std::abs(rep.mean), 1e-300));
    if (rep.mean == 0.0) rep.max_relative_deviation = 0.0;
    rep.pass = rep.max_relative_deviation < tol;
    return rep;
}

// ---------------------------------------------------------------------------
// Positivity of the small-ℏ Wigner function.

struct PositivityOptions {
    std::size_t points = 8;   ///< m
    std::size_t sets = 20;
    double extent = 2.0;      ///< sample points uniform in [−extent, extent]²
    std::uint64_t seed = 7;
    double omega_max = 6.0;   ///< levels above this energy are dropped
    std::size_t radial_nodes = 8001;
    std::size_t grid_points = 64;
    double tolerance = 1e-8;
};

struct PositivityLevel {
    double hbar = 0.0;
    std::size_t levels = 0;
    double f_at_zero = 0.0;
    double min_eigenvalue = 0.0;         ///< over all point sets, ℏ-positive-type matrices
    double min_wigner = 0.0;             ///< on the phase grid
    double negative_mass_fraction = 0.0; ///< ∫ρ_ℏ⁻ dφ / ∫|ρ_ℏ| dφ
};

struct PositivityReport {
    std::vector<PositivityLevel> levels;
    double bochner_min_eigenvalue = 0.0;  ///< smallest ℏ, phase factor dropped
    bool matrices_pass = false;
    bool negative_mass_decreasing = false;
    std::uint64_t seed = 0;
    std::size_t points = 0, sets = 0;
};

/// Oscillator Wigner function of a state diagonal in energy, on the radial variable H.
class RadialWigner {
public:
    RadialWigner(const std::function<double(double)>& rho, double hbar, double omega_max) : hbar_(hbar) {
        for (std::size_t n = 0;; ++n) {
            const double w = hbar * (static_cast<double>(n) + 0.5);
            if (w > omega_max) break;
            probs_.push_back(hbar * rho(w));
        }
        double s = 0.0;
        for (double p : probs_) s += p;
        if (!(s > 0.0)) throw DegenerateStateError("RadialWigner: state has no weight below omega_max");
        for (double& p : probs_) p /= s;
    }

    std::size_t levels() const { return probs_.size(); }
    const std::vector<double>& probabilities() const { return probs_; }

    double operator()(double H) const {
        const double x = 4.0 * H / hbar_;
        const double e = std::exp(-2.0 * H / hbar_) / (std::numbers::pi * hbar_);
        double a = 1.0, b = 1.0 - x, acc = probs_[0];
        if (probs_.size() > 1) acc -= probs_[1] * b;
        for (std::size_t k = 1; k + 1 < probs_.size(); ++k) {
            const double kk = static_cast<double>(k);
            const double c = ((2.0 * kk + 1.0 - x) * b - kk * a) / (kk + 1.0);
            a = b;
            b = c;
            acc += ((k + 1) % 2 == 0 ? 1.0 : -1.0) * probs_[k + 1] * c;
        }
        return e * acc;
    }

    /// Σ p_n e^{−ℏ|z|²/4} L_n(ℏ|z|²/2).
    double characteristic_oracle(double z2) const {
        double s = 0.0;
        for (std::size_t n = 0; n < probs_.size(); ++n) s += probs_[n] * oscillator_characteristic(n, z2, hbar_);
        return s;
    }

private:
    double hbar_;
    std::vector<double> probs_;
};

namespace detail {

/// Simpson nodes and weights on [0, H_max] for radial integrals ∫ f dφ = 2π ∫ f(H) dH.
inline void simpson(std::size_t n, double hi, std::vector<double>& x, std::vector<double>& w) {
    if (n % 2 == 0) ++n;
    x.resize(n);
    w.resize(n);
    const double h = hi / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = h * static_cast<double>(i);
        w[i] = h / 3.0 * ((i == 0 || i == n - 1) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0));
    }
}

}  // namespace detail

/// f_ℏ(z) = ∫ ρ_ℏ(φ) e^{iσ(φ,z)} dφ for a rotation-invariant ρ_ℏ, by Hankel quadrature on H.
class RadialCharacteristic {
public:
    RadialCharacteristic(const RadialWigner& W, double H_max, std::size_t nodes) {
        detail::simpson(nodes, H_max, H_, w_);
        vals_.resize(H_.size());
        for (std::size_t i = 0; i < H_.size(); ++i) vals_[i] = 2.0 * std::numbers::pi * w_[i] * W(H_[i]);
    }

    double operator()(double z) const {
        double s = 0.0;
        for (std::size_t i = 0; i < H_.size(); ++i) s += vals_[i] * std::cyl_bessel_j(0.0, std::sqrt(2.0 * H_[i]) * z);
        return s;
    }

    double mass() const {
        double s = 0.0;
        for (double v : vals_) s += v;
        return s;
    }

    double negative_mass_fraction() const {
        double neg = 0.0, abs = 0.0;
        for (double v : vals_) {
            abs += std::abs(v);
            if (v < 0.0) neg -= v;
        }
        return abs > 0.0 ? neg / abs : 0.0;
    }

private:
    std::vector<double> H_, w_, vals_;
};

/// Minimum eigenvalue of [f(a_j − a_k) e^{iℏσ(a_k,a_j)/2}]_{jk} for real radial f; `hbar` = 0 gives the Bochner matrix.
template <class F>
double positive_type_min_eigenvalue(F&& f, const std::vector<std::array<double, 2>>& a, double hbar) {
    const auto m = static_cast<Eigen::Index>(a.size());
    Eigen::MatrixXcd M(m, m);
    const double f0 = f(0.0);
    for (Eigen::Index j = 0; j < m; ++j) {
        M(j, j) = f0;
        for (Eigen::Index k = j + 1; k < m; ++k) {
            const auto& aj = a[static_cast<std::size_t>(j)];
            const auto& ak = a[static_cast<std::size_t>(k)];
            const double dz = std::hypot(aj[0] - ak[0], aj[1] - ak[1]);
            const double sigma = ak[0] * aj[1] - ak[1] * aj[0];
            M(j, k) = f(dz) * std::polar(1.0, 0.5 * hbar * sigma);
            M(k, j) = std::conj(M(j, k));
        }
    }
    return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(M, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
}

/// Positive-type and negative-mass checks for an energy-diagonal state ρ(ω) of the oscillator model along an ℏ sequence.
inline PositivityReport positivity_check(const std::function<double(double)>& rho_of_omega, const ModelSpec& m,
                                         const std::vector<double>& hbars, const PositivityOptions& opt = {}) {
    if (m.kind != ModelKind::oscillator)
        throw UnsupportedModelError("positivity_check: requires the rotation-invariant oscillator model");
    if (opt.points < 1 || opt.sets < 1) throw std::invalid_argument("positivity_check: need at least one point and one set");
    if (hbars.empty()) throw std::invalid_argument("positivity_check: empty hbar sequence");
    PositivityReport rep;
    rep.seed = opt.seed;
    rep.points = opt.points;
    rep.sets = opt.sets;

    std::mt19937_64 rng(opt.seed);
    std::uniform_real_distribution<double> U(-opt.extent, opt.extent);
    std::vector<std::vector<std::array<double, 2>>> point_sets(opt.sets);
    for (auto& s : point_sets) {
        s.resize(opt.points);
        for (auto& a : s) {
            a[0] = U(rng);
            a[1] = U(rng);
        }
    }

    const double H_max = opt.omega_max + 8.0 * std::sqrt(opt.omega_max) + 2.0;
    rep.matrices_pass = true;
    for (std::size_t h = 0; h < hbars.size(); ++h) {
        const double hbar = hbars[h];
        const RadialWigner W(rho_of_omega, hbar, opt.omega_max);
        const RadialCharacteristic f(W, H_max, opt.radial_nodes);
        PositivityLevel lvl;
        lvl.hbar = hbar;
        lvl.levels = W.levels();
        lvl.f_at_zero = f(0.0);
        lvl.negative_mass_fraction = f.negative_mass_fraction();

        const double E = std::sqrt(2.0 * opt.omega_max) + 1.0;
        const SpectralGrid g = make_grid({-E, E}, opt.grid_points, QuadratureRule::periodic, "q");
        lvl.min_wigner = INFINITY;
        for (std::size_t i = 0; i < g.size(); ++i)
            for (std::size_t j = 0; j < g.size(); ++j)
                lvl.min_wigner = std::min(lvl.min_wigner, W(0.5 * (g.node(i) * g.node(i) + g.node(j) * g.node(j))));

        lvl.min_eigenvalue = INFINITY;
        for (const auto& s : point_sets)
            lvl.min_eigenvalue = std::min(lvl.min_eigenvalue, positive_type_min_eigenvalue(f, s, hbar));
        if (lvl.min_eigenvalue < -opt.tolerance) rep.matrices_pass = false;

        if (h + 1 == hbars.size()) {
            rep.bochner_min_eigenvalue = INFINITY;
            for (const auto& s : point_sets)
                rep.bochner_min_eigenvalue = std::min(rep.bochner_min_eigenvalue, positive_type_min_eigenvalue(f, s, 0.0));
        }
        rep.levels.push_back(lvl);
    }
    rep.negative_mass_decreasing = true;
    for (std::size_t i = 1; i < rep.levels.size(); ++i)
        if (rep.levels[i].negative_mass_fraction > 1.05 * rep.levels[i - 1].negative_mass_fraction + 1e-12)
            rep.negative_mass_decreasing = false;
    if (rep.levels.size() > 1 && rep.levels.front().negative_mass_fraction > 0.0 &&
        !(rep.levels.back().negative_mass_fraction < rep.levels.front().negative_mass_fraction))
        rep.negative_mass_decreasing = false;
    return rep;
}

/// State overload: ρ must be diagonal in energy with no extra labels and no regular part.
inline PositivityReport positivity_check(const StateFunctional& rho, const ModelSpec& m, const std::vector<double>& hbars,
                                         const PositivityOptions& opt = {}) {
    if (rho.form != SingularForm::grid_kernel || rho.o.size() != 1)
        throw PreconditionError("positivity_check: state must be an energy-diagonal grid kernel without extra labels", 0.0);
    const double reg = rho.regular.n_omega() > 0 ? rho.regular.max_abs() : 0.0;
    if (reg > 0.0) throw PreconditionError("positivity_check: state has a regular (off-diagonal in energy) part", reg);
    std::vector<double> w(rho.omega.size()), v(rho.omega.size());
    for (std::size_t i = 0; i < w.size(); ++i) {
        w[i] = rho.omega.node(i);
        v[i] = rho.singular(i, 0, 0).real();
    }
    auto interp = [w, v](double x) {
        if (x < w.front() || x > w.back()) return 0.0;
        auto it = std::upper_bound(w.begin(), w.end(), x);
        if (it == w.end()) return v.back();
        const std::size_t j = static_cast<std::size_t>(it - w.begin());
        if (j == 0) return v.front();
        const double t = (x - w[j - 1]) / (w[j] - w[j - 1]);
        return (1.0 - t) * v[j - 1] + t * v[j];
    };
    return positivity_check(std::function<double(double)>(interp), m, hbars, opt);
}

}  // namespace sidlab
