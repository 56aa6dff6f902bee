#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "algebra.hpp"

namespace sidlab {

struct EvolutionParams {
    double hbar = 1.0;
    std::vector<double> times;

    void validate() const {
        if (!(hbar > 0.0) || !std::isfinite(hbar)) throw std::invalid_argument("EvolutionParams: hbar must be positive");
        for (std::size_t i = 0; i < times.size(); ++i) {
            if (!std::isfinite(times[i]) || times[i] < 0.0)
                throw std::invalid_argument("EvolutionParams: times must be finite and non-negative");
            if (i > 0 && times[i] < times[i - 1])
                throw std::invalid_argument("EvolutionParams: times must be sorted ascending");
        }
    }
};

namespace detail {

inline void check_time(double t, double hbar) {
    if (!std::isfinite(t)) throw std::invalid_argument("evolution: t must be finite");
    if (!(hbar > 0.0)) throw std::invalid_argument("evolution: hbar must be positive");
}

inline void apply_phase(Kernel4& k, const SpectralGrid& omega, double t, double hbar) {
    if (t == 0.0) return;
    const std::size_t no = k.n_o();
    for (std::size_t w = 0; w < omega.size(); ++w)
        for (std::size_t v = 0; v < omega.size(); ++v) {
            const cplx ph = std::polar(1.0, (omega.node(w) - omega.node(v)) * t / hbar);
            for (std::size_t a = 0; a < no; ++a)
                for (std::size_t b = 0; b < no; ++b) k(w, v, a, b) *= ph;
        }
}

}  // namespace detail

/// Heisenberg picture: singular kernel fixed, regular kernel times e^{i(ω−ω′)t/ℏ}.
inline Observable evolve_observable(const Observable& A, double t, double hbar) {
    detail::check_time(t, hbar);
    Observable out = A;
    detail::apply_phase(out.regular, A.omega, t, hbar);
    return out;
}

/// Schrödinger picture dual to evolve_observable under the pairing.
inline StateFunctional evolve_state(const StateFunctional& rho, double t, double hbar) {
    detail::check_time(t, hbar);
    StateFunctional out = rho;
    if (out.regular.n_omega() > 0) detail::apply_phase(out.regular, rho.omega, t, hbar);
    return out;
}

struct MeanValue {
    cplx invariant = 0.0;
    cplx fluctuating = 0.0;
    cplx total() const { return invariant + fluctuating; }
};

/// Regular-sector pairing reduced to an ω×ω matrix so that many times are cheap.
class FluctuationKernel {
public:
    FluctuationKernel(const StateFunctional& rho, const Observable& A) : omega_(A.omega) {
        const std::size_t nw = A.omega.size();
        M_ = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(nw), static_cast<Eigen::Index>(nw));
        if (rho.regular.n_omega() == 0 || rho.regular.is_zero()) return;
        if (!rho.omega.compatible(A.omega) || !rho.o.compatible(A.o))
            throw std::invalid_argument("mean_value: grid mismatch");
        for (std::size_t w = 0; w < nw; ++w)
            for (std::size_t v = 0; v < nw; ++v) {
                cplx s = 0.0;
                for (std::size_t a = 0; a < A.o.size(); ++a)
                    for (std::size_t b = 0; b < A.o.size(); ++b)
                        s += A.o.weight(a) * A.o.weight(b) * rho.regular(w, v, a, b) * A.regular(w, v, a, b);
                M_(static_cast<Eigen::Index>(w), static_cast<Eigen::Index>(v)) =
                    A.omega.weight(w) * A.omega.weight(v) * s;
            }
    }

    cplx at(double t, double hbar) const {
        cplx s = 0.0;
        const Eigen::Index n = M_.rows();
        for (Eigen::Index w = 0; w < n; ++w)
            for (Eigen::Index v = 0; v < n; ++v) {
                const cplx m = M_(w, v);
                if (m == cplx(0.0)) continue;
                s += m * std::polar(1.0, (omega_.node(static_cast<std::size_t>(w)) -
                                          omega_.node(static_cast<std::size_t>(v))) * t / hbar);
            }
        return s;
    }

    const Eigen::MatrixXcd& matrix() const { return M_; }
    const SpectralGrid& omega() const { return omega_; }

private:
    SpectralGrid omega_;
    Eigen::MatrixXcd M_;
};

inline MeanValue mean_value_parts(const StateFunctional& rho, const Observable& A, double t, double hbar) {
    detail::check_time(t, hbar);
    MeanValue mv;
    mv.invariant = pair_singular(rho, A);
    mv.fluctuating = FluctuationKernel(rho, A).at(t, hbar);
    return mv;
}

/// ⟨A⟩_ρ(t) = (ρ|A(t)).
inline cplx mean_value(const StateFunctional& rho, const Observable& A, double t, double hbar) {
    return mean_value_parts(rho, A, t, hbar).total();
}

/// Weak limit t→∞: the singular component alone.
inline StateFunctional decohered_state(const StateFunctional& rho) {
    StateFunctional out = rho;
    out.regular = Kernel4(rho.omega.size(), rho.o.size());
    return out;
}

/// Grid-induced recurrence 2πℏ/Δω for equispaced ω nodes; none otherwise.
inline std::optional<double> revival_time(const SpectralGrid& omega, double hbar) {
    if (omega.size() < 2 || !omega.uniform()) return std::nullopt;
    return 2.0 * std::numbers::pi * hbar / omega.spacing();
}

/// `count` equispaced samples on [0, πℏ/Δω], half the revival time.
inline std::vector<double> pre_revival_times(const SpectralGrid& omega, double hbar, std::size_t count) {
    const auto tr = revival_time(omega, hbar);
    if (!tr) throw std::invalid_argument("pre_revival_times: ω grid is not equispaced");
    if (count < 2) throw std::invalid_argument("pre_revival_times: need at least two samples");
    std::vector<double> ts(count);
    for (std::size_t i = 0; i < count; ++i) ts[i] = 0.5 * *tr * static_cast<double>(i) / static_cast<double>(count - 1);
    return ts;
}

struct TracePoint {
    double t = 0.0;
    cplx value = 0.0;
    double modulus = 0.0;
};

struct DecoherenceReport {
    std::optional<double> t_D;
    double epsilon = 0.0;
    std::optional<double> E_char;
    std::optional<double> E_spread;
    std::optional<double> heuristic_time;
    std::optional<double> revival_time;
    std::optional<double> window_end;
    bool samples_within_window = true;
    cplx fluct_at_zero = 0.0;
    std::vector<TracePoint> fluct_trace;
    std::string integrability_note =
        "finite grid: regular kernel integrable; decay saturates at the grid revival floor";
};

/// Operational decoherence time: first sample after which |fluct(t)| ≤ ε|fluct(0)| for all later samples.
inline DecoherenceReport decoherence_time(const StateFunctional& rho, const Observable& A,
                                          const EvolutionParams& params, double epsilon) {
    params.validate();
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw std::invalid_argument("decoherence_time: epsilon must lie in (0,1)");
    DecoherenceReport rep;
    rep.epsilon = epsilon;
    rep.revival_time = revival_time(A.omega, params.hbar);
    if (rep.revival_time) {
        rep.window_end = 0.5 * *rep.revival_time;
        for (double t : params.times)
            if (t > *rep.window_end * (1.0 + 1e-12)) rep.samples_within_window = false;
    }

    const FluctuationKernel fk(rho, A);
    rep.fluct_at_zero = fk.at(0.0, params.hbar);
    rep.fluct_trace.reserve(params.times.size());
    for (double t : params.times) {
        const cplx v = fk.at(t, params.hbar);
        rep.fluct_trace.push_back({t, v, std::abs(v)});
    }

    const double f0 = std::abs(rep.fluct_at_zero);
    const double total_weight = fk.matrix().cwiseAbs().sum();
    if (f0 == 0.0 || total_weight == 0.0) {
        rep.t_D = 0.0;
    } else {
        const double thr = epsilon * f0;
        std::optional<std::size_t> first;
        for (std::size_t i = rep.fluct_trace.size(); i-- > 0;) {
            if (rep.fluct_trace[i].modulus <= thr) first = i;
            else break;
        }
        if (first) rep.t_D = rep.fluct_trace[*first].t;
    }

    if (total_weight > 0.0) {
        const Eigen::MatrixXcd& M = fk.matrix();
        double sw = 0.0, s_abs = 0.0, s_sig = 0.0;
        for (Eigen::Index w = 0; w < M.rows(); ++w)
            for (Eigen::Index v = 0; v < M.cols(); ++v) {
                const double m = std::abs(M(w, v));
                const double d = A.omega.node(static_cast<std::size_t>(w)) - A.omega.node(static_cast<std::size_t>(v));
                sw += m;
                s_abs += m * std::abs(d);
                s_sig += m * d;
            }
        rep.E_char = s_abs / sw;
        const double mean = s_sig / sw;
        double var = 0.0;
        for (Eigen::Index w = 0; w < M.rows(); ++w)
            for (Eigen::Index v = 0; v < M.cols(); ++v) {
                const double d = A.omega.node(static_cast<std::size_t>(w)) -
                                 A.omega.node(static_cast<std::size_t>(v)) - mean;
                var += std::abs(M(w, v)) * d * d;
            }
        rep.E_spread = std::sqrt(var / sw);
        if (*rep.E_spread > 0.0)
            rep.heuristic_time = params.hbar * std::sqrt(2.0 * std::log(1.0 / epsilon)) / *rep.E_spread;
    }
    return rep;
}

}  // namespace sidlab
