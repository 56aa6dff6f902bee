#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "errors.hpp"
#include "interp.hpp"
#include "poly_symbol.hpp"
#include "spectral.hpp"

namespace sidlab {

/// Phase space R^{2(N+1)} with axes ordered (q_1..q_n, p_1..p_n), last axis fastest.
struct PhaseSpaceChart {
    std::vector<SpectralGrid> q_grids;
    std::vector<SpectralGrid> p_grids;
    std::string note;

    std::size_t dof() const { return q_grids.size(); }
    std::size_t axes() const { return 2 * dof(); }
    const SpectralGrid& axis(std::size_t k) const { return k < dof() ? q_grids[k] : p_grids[k - dof()]; }

    std::size_t size() const {
        std::size_t n = 1;
        for (std::size_t k = 0; k < axes(); ++k) n *= axis(k).size();
        return n;
    }

    std::size_t stride(std::size_t k) const {
        std::size_t s = 1;
        for (std::size_t j = axes(); j-- > k + 1;) s *= axis(j).size();
        return s;
    }

    void unflatten(std::size_t flat, std::vector<std::size_t>& idx) const {
        idx.resize(axes());
        for (std::size_t k = axes(); k-- > 0;) {
            const std::size_t n = axis(k).size();
            idx[k] = flat % n;
            flat /= n;
        }
    }

    void point(std::size_t flat, std::vector<double>& phi) const {
        phi.resize(axes());
        for (std::size_t k = axes(); k-- > 0;) {
            const std::size_t n = axis(k).size();
            phi[k] = axis(k).node(flat % n);
            flat /= n;
        }
    }

    double cell_weight(std::size_t flat) const {
        double w = 1.0;
        for (std::size_t k = axes(); k-- > 0;) {
            const std::size_t n = axis(k).size();
            w *= axis(k).weight(flat % n);
            flat /= n;
        }
        return w;
    }

    /// ω_ab = [[0, I], [−I, 0]].
    Eigen::MatrixXi symplectic_lower() const {
        const auto n = static_cast<Eigen::Index>(dof());
        Eigen::MatrixXi w = Eigen::MatrixXi::Zero(2 * n, 2 * n);
        w.topRightCorner(n, n) = Eigen::MatrixXi::Identity(n, n);
        w.bottomLeftCorner(n, n) = -Eigen::MatrixXi::Identity(n, n);
        return w;
    }

    /// ω^ab = [[0, −I], [I, 0]], the inverse of ω_ab.
    Eigen::MatrixXi symplectic_upper() const { return -symplectic_lower(); }
};

inline PhaseSpaceChart make_chart(SpectralGrid q, SpectralGrid p, std::string note = "") {
    return PhaseSpaceChart{{std::move(q)}, {std::move(p)}, std::move(note)};
}

inline PhaseSpaceChart make_chart(std::vector<SpectralGrid> qs, std::vector<SpectralGrid> ps, std::string note = "") {
    if (qs.size() != ps.size() || qs.empty()) throw std::invalid_argument("make_chart: need matching q and p axes");
    return PhaseSpaceChart{std::move(qs), std::move(ps), std::move(note)};
}

enum class SymbolClass { polynomial_exact, grid_sampled };

struct PhaseSpaceFunction {
    PhaseSpaceChart chart;
    std::vector<cplx> values;
    double hbar = 1.0;
    SymbolClass tag = SymbolClass::grid_sampled;

    cplx& operator[](std::size_t i) { return values[i]; }
    const cplx& operator[](std::size_t i) const { return values[i]; }
    /// One degree of freedom: value at (q index i, p index j).
    cplx& at(std::size_t i, std::size_t j) { return values[i * chart.p_grids[0].size() + j]; }
    const cplx& at(std::size_t i, std::size_t j) const { return values[i * chart.p_grids[0].size() + j]; }
};

inline PhaseSpaceFunction zero_function(const PhaseSpaceChart& chart, double hbar) {
    return PhaseSpaceFunction{chart, std::vector<cplx>(chart.size(), cplx(0.0)), hbar, SymbolClass::grid_sampled};
}

/// Sample f(φ) on every chart node.
template <class F>
PhaseSpaceFunction sample(const PhaseSpaceChart& chart, F&& f, double hbar) {
    PhaseSpaceFunction out = zero_function(chart, hbar);
    std::vector<double> phi;
    for (std::size_t i = 0; i < chart.size(); ++i) {
        chart.point(i, phi);
        out.values[i] = f(std::span<const double>(phi));
    }
    return out;
}

inline PhaseSpaceFunction sample(const PhaseSpaceChart& chart, const PolySymbol& f, double hbar) {
    if (f.dof() != chart.dof()) throw std::invalid_argument("sample: symbol and chart dimensions differ");
    PhaseSpaceFunction out = sample(chart, [&](std::span<const double> phi) { return f.evaluate(phi); }, hbar);
    out.tag = SymbolClass::polynomial_exact;
    return out;
}

inline cplx integrate(const PhaseSpaceFunction& f) {
    cplx s = 0.0;
    for (std::size_t i = 0; i < f.values.size(); ++i) s += f.values[i] * f.chart.cell_weight(i);
    return s;
}

/// ∫ a(φ) b(φ) dφ on a shared chart.
inline cplx phase_space_pair(const PhaseSpaceFunction& a, const PhaseSpaceFunction& b) {
    if (a.values.size() != b.values.size()) throw std::invalid_argument("phase_space_pair: chart mismatch");
    cplx s = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) s += a.values[i] * b.values[i] * a.chart.cell_weight(i);
    return s;
}

inline double max_abs(const PhaseSpaceFunction& f) {
    double m = 0.0;
    for (const auto& v : f.values) m = std::max(m, std::abs(v));
    return m;
}

inline double max_abs_imag(const PhaseSpaceFunction& f) {
    double m = 0.0;
    for (const auto& v : f.values) m = std::max(m, std::abs(v.imag()));
    return m;
}

inline double l2_norm(const PhaseSpaceFunction& f) {
    double s = 0.0;
    for (std::size_t i = 0; i < f.values.size(); ++i) s += std::norm(f.values[i]) * f.chart.cell_weight(i);
    return std::sqrt(s);
}

/// ‖a − b‖₂ / ‖b‖₂ on the chart.
inline double relative_l2_error(const PhaseSpaceFunction& a, const PhaseSpaceFunction& b) {
    if (a.values.size() != b.values.size()) throw std::invalid_argument("relative_l2_error: chart mismatch");
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        const double w = b.chart.cell_weight(i);
        num += std::norm(a.values[i] - b.values[i]) * w;
        den += std::norm(b.values[i]) * w;
    }
    return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

/// Position-basis operator kernel D(x)δ(x−x′) + K(x,x′) on an equispaced x grid.
struct PositionKernel {
    SpectralGrid x;
    Eigen::MatrixXcd regular;
    std::vector<cplx> diagonal;  ///< empty when there is no point-mass part
};

enum class KernelKind { operator_kernel, state_kernel };

namespace detail {

inline double uniform_spacing(const SpectralGrid& g, const char* what) {
    if (g.size() < 2 || !g.uniform()) throw std::invalid_argument(std::string(what) + ": grid must be equispaced");
    return g.spacing();
}

/// Position of q on the half-lattice x0 + mΔ/2; returns m, or throws.
inline long half_lattice_index(const SpectralGrid& x, double q) {
    const double h = x.spacing();
    const double m = 2.0 * (q - x.front()) / h;
    const double r = std::round(m);
    if (std::abs(m - r) > 1e-7) throw std::invalid_argument("wigner_symbol: chart q nodes must lie on the half-lattice of the kernel grid");
    return static_cast<long>(r);
}

}  // namespace detail

/// Midpoint Wigner transform W(q,p) = ∫ K(q+s/2, q−s/2) e^{−ips/ℏ} ds of a grid kernel.
/// State kernels are divided by 2πℏ so that ∫W dφ equals the trace.
inline PhaseSpaceFunction wigner_symbol(const PositionKernel& K, const PhaseSpaceChart& chart, double hbar,
                                        KernelKind kind = KernelKind::operator_kernel) {
    if (!(hbar > 0.0)) throw std::invalid_argument("wigner_symbol: hbar must be positive");
    if (chart.dof() != 1) throw std::invalid_argument("wigner_symbol: grid kernels support one degree of freedom");
    const std::size_t n = K.x.size();
    if (K.regular.size() != 0 && (static_cast<std::size_t>(K.regular.rows()) != n || K.regular.rows() != K.regular.cols()))
        throw std::invalid_argument("wigner_symbol: kernel must be square on the x grid");
    if (!K.diagonal.empty() && K.diagonal.size() != n)
        throw std::invalid_argument("wigner_symbol: diagonal part must match the x grid");
    const double h = detail::uniform_spacing(K.x, "wigner_symbol");
    const SpectralGrid& qg = chart.q_grids[0];
    const SpectralGrid& pg = chart.p_grids[0];
    PhaseSpaceFunction W = zero_function(chart, hbar);
    const bool has_regular = K.regular.size() != 0;

    for (std::size_t i = 0; i < qg.size(); ++i) {
        const long m = detail::half_lattice_index(K.x, qg.node(i));
        if (m < 0 || m > 2 * static_cast<long>(n - 1)) continue;
        const long j = m / 2;
        const bool odd = (m % 2) != 0;
        for (std::size_t l = 0; l < pg.size(); ++l) {
            const double p = pg.node(l);
            cplx acc = 0.0;
            if (has_regular) {
                for (long k = 0;; ++k) {
                    const long a = odd ? j + 1 + k : j + k;
                    const long b = j - k;
                    if (a >= static_cast<long>(n) || b < 0) break;
                    const double s = (a - b) * h;
                    const cplx e = std::polar(1.0, -p * s / hbar);
                    if (a == b) {
                        acc += K.regular(a, b);
                    } else {
                        acc += K.regular(a, b) * e + K.regular(b, a) * std::conj(e);
                    }
                }
                acc *= 2.0 * h;
            }
            if (!K.diagonal.empty()) {
                if (!odd) {
                    acc += K.diagonal[static_cast<std::size_t>(j)];
                } else {
                    const auto st = lagrange_stencil<4>(K.x, qg.node(i));
                    for (std::size_t t = 0; t < st.count; ++t) acc += st.w[t] * K.diagonal[st.start + t];
                }
            }
            W.at(i, l) = acc;
        }
    }
    if (kind == KernelKind::state_kernel)
        for (auto& v : W.values) v /= 2.0 * std::numbers::pi * hbar;
    return W;
}

/// Chart dual to an equispaced x grid: q on the half-lattice of x, p periodic with span πℏ/Δx and one node per x node.
inline PhaseSpaceChart matched_chart(const SpectralGrid& x, double hbar) {
    if (!(hbar > 0.0)) throw std::invalid_argument("matched_chart: hbar must be positive");
    const double h = detail::uniform_spacing(x, "matched_chart");
    const std::size_t n = x.size();
    std::vector<double> qn(2 * n - 1), qw(2 * n - 1, 0.5 * h);
    for (std::size_t i = 0; i < qn.size(); ++i) qn[i] = x.front() + 0.5 * h * static_cast<double>(i);
    qw.front() = qw.back() = 0.25 * h;
    const double P = std::numbers::pi * hbar / h;
    return make_chart(lattice_grid(std::move(qn), std::move(qw), "q"),
                      make_grid({-0.5 * P, 0.5 * P}, n, QuadratureRule::periodic, "p"), "half-lattice q, p period πℏ/Δx");
}

/// Weyl quantization of a sampled symbol: K(x,x′) = (2πℏ)^{-1} ∫ f((x+x′)/2, p) e^{ip(x−x′)/ℏ} dp.
inline PositionKernel weyl_quantize(const PhaseSpaceFunction& f, const SpectralGrid& x) {
    if (f.chart.dof() != 1) throw std::invalid_argument("weyl_quantize: grid symbols support one degree of freedom");
    const double hbar = f.hbar;
    const double h = detail::uniform_spacing(x, "weyl_quantize");
    const SpectralGrid& qg = f.chart.q_grids[0];
    const SpectralGrid& pg = f.chart.p_grids[0];
    const std::size_t n = x.size();
    const long ns = 2 * static_cast<long>(n) - 1;

    // F(i, d) = Σ_p w_p f(q_i, p) e^{i p s_d / ℏ}, with s_d = (d − (n−1))·h.
    Eigen::MatrixXcd F(static_cast<Eigen::Index>(qg.size()), ns);
    for (std::size_t i = 0; i < qg.size(); ++i)
        for (long d = 0; d < ns; ++d) {
            const double s = static_cast<double>(d - static_cast<long>(n - 1)) * h;
            cplx acc = 0.0;
            for (std::size_t l = 0; l < pg.size(); ++l)
                acc += pg.weight(l) * f.at(i, l) * std::polar(1.0, pg.node(l) * s / hbar);
            F(static_cast<Eigen::Index>(i), d) = acc;
        }

    PositionKernel K{x, Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)), {}};
    const double norm = 1.0 / (2.0 * std::numbers::pi * hbar);
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b) {
            const double Q = 0.5 * (x.node(a) + x.node(b));
            const long d = static_cast<long>(a) - static_cast<long>(b) + static_cast<long>(n - 1);
            const std::size_t near = qg.nearest(Q);
            cplx v;
            if (std::abs(qg.node(near) - Q) <= 1e-9 * std::max(1.0, std::abs(Q))) {
                v = F(static_cast<Eigen::Index>(near), d);
            } else {
                if (Q < qg.front() || Q > qg.back()) continue;
                const auto st = lagrange_stencil<6>(qg, Q);
                v = 0.0;
                for (std::size_t t = 0; t < st.count; ++t) v += st.w[t] * F(static_cast<Eigen::Index>(st.start + t), d);
            }
            K.regular(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = norm * v;
        }
    return K;
}

/// Position kernel of a p-independent polynomial symbol: f(x)·δ(x−x′).
inline PositionKernel position_kernel(const PolySymbol& f, const SpectralGrid& x) {
    if (f.dof() != 1) throw std::invalid_argument("position_kernel: one degree of freedom only");
    if (f.depends_on_p())
        throw std::invalid_argument("position_kernel: symbol depends on p; use WeylOperator::apply on test functions");
    PositionKernel K{x, Eigen::MatrixXcd(), std::vector<cplx>(x.size())};
    for (std::size_t i = 0; i < x.size(); ++i) K.diagonal[i] = f.evaluate(x.node(i), 0.0);
    return K;
}

// ---------------------------------------------------------------------------
// Spectral calculus on periodic grids.

namespace detail {

inline std::vector<double> wavenumbers(const SpectralGrid& g) {
    const std::size_t n = g.size();
    const double L = g.support().length();
    std::vector<double> k(n);
    for (std::size_t m = 0; m < n; ++m) {
        const long mm = (m <= n / 2) ? static_cast<long>(m) : static_cast<long>(m) - static_cast<long>(n);
        k[m] = 2.0 * std::numbers::pi * static_cast<double>(mm) / L;
    }
    return k;
}

inline Eigen::MatrixXcd dft_matrix(std::size_t n) {
    Eigen::MatrixXcd F(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t m = 0; m < n; ++m)
            F(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(j)) =
                std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>((j * m) % n) / static_cast<double>(n));
    return F;
}

inline void require_periodic(const SpectralGrid& g) {
    if (g.rule() != QuadratureRule::periodic)
        throw std::invalid_argument("spectral differentiation requires periodic grids");
}

}  // namespace detail

/// Dense matrix of the order-k spectral derivative on a periodic grid.
inline Eigen::MatrixXcd spectral_derivative_matrix(const SpectralGrid& g, int order) {
    detail::require_periodic(g);
    const std::size_t n = g.size();
    const auto k = detail::wavenumbers(g);
    const Eigen::MatrixXcd F = detail::dft_matrix(n);
    Eigen::VectorXcd mult(static_cast<Eigen::Index>(n));
    for (std::size_t m = 0; m < n; ++m) {
        cplx ik = std::pow(cplx(0.0, k[m]), order);
        if (order % 2 == 1 && n % 2 == 0 && m == n / 2) ik = 0.0;
        mult(static_cast<Eigen::Index>(m)) = ik;
    }
    return F.adjoint() * mult.asDiagonal() * F / static_cast<double>(n);
}

/// Ratio of the largest Fourier coefficient beyond a third of the band to the largest overall.
inline double spectral_tail_ratio(const PhaseSpaceFunction& f) {
    if (f.chart.dof() != 1) throw std::invalid_argument("spectral_tail_ratio: one degree of freedom only");
    const SpectralGrid& qg = f.chart.q_grids[0];
    const SpectralGrid& pg = f.chart.p_grids[0];
    detail::require_periodic(qg);
    detail::require_periodic(pg);
    const auto nq = static_cast<Eigen::Index>(qg.size()), np = static_cast<Eigen::Index>(pg.size());
    Eigen::MatrixXcd V(nq, np);
    for (Eigen::Index i = 0; i < nq; ++i)
        for (Eigen::Index j = 0; j < np; ++j) V(i, j) = f.at(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
    const Eigen::MatrixXcd C = detail::dft_matrix(qg.size()) * V * detail::dft_matrix(pg.size()).transpose();
    const double top = C.cwiseAbs().maxCoeff();
    if (top == 0.0) return 0.0;
    double tail = 0.0;
    for (Eigen::Index i = 0; i < nq; ++i)
        for (Eigen::Index j = 0; j < np; ++j) {
            const Eigen::Index mi = std::min(i, nq - i), mj = std::min(j, np - j);
            if (3 * mi > nq || 3 * mj > np) tail = std::max(tail, std::abs(C(i, j)));
        }
    return tail / top;
}

constexpr int kMaxGridStarOrder = 10;

/// Differentiates grid symbols spectrally along q and p (one degree of freedom).
class SpectralCalculus {
public:
    SpectralCalculus(const PhaseSpaceChart& chart, int max_order) : chart_(chart) {
        if (chart.dof() != 1) throw std::invalid_argument("SpectralCalculus: one degree of freedom only");
        for (int k = 0; k <= max_order; ++k) {
            Dq_.push_back(spectral_derivative_matrix(chart.q_grids[0], k));
            Dp_.push_back(spectral_derivative_matrix(chart.p_grids[0], k));
        }
    }

    Eigen::MatrixXcd as_matrix(const PhaseSpaceFunction& f) const {
        const auto nq = static_cast<Eigen::Index>(chart_.q_grids[0].size());
        const auto np = static_cast<Eigen::Index>(chart_.p_grids[0].size());
        if (f.values.size() != static_cast<std::size_t>(nq * np)) throw std::invalid_argument("SpectralCalculus: chart mismatch");
        Eigen::MatrixXcd V(nq, np);
        for (Eigen::Index i = 0; i < nq; ++i)
            for (Eigen::Index j = 0; j < np; ++j) V(i, j) = f.values[static_cast<std::size_t>(i * np + j)];
        return V;
    }

    PhaseSpaceFunction from_matrix(const Eigen::MatrixXcd& V, double hbar) const {
        PhaseSpaceFunction out = zero_function(chart_, hbar);
        for (Eigen::Index i = 0; i < V.rows(); ++i)
            for (Eigen::Index j = 0; j < V.cols(); ++j) out.values[static_cast<std::size_t>(i * V.cols() + j)] = V(i, j);
        return out;
    }

    /// ∂_q^a ∂_p^b V.
    Eigen::MatrixXcd derivative(const Eigen::MatrixXcd& V, int a, int b) const {
        return Dq_.at(static_cast<std::size_t>(a)) * V * Dp_.at(static_cast<std::size_t>(b)).transpose();
    }

private:
    PhaseSpaceChart chart_;
    std::vector<Eigen::MatrixXcd> Dq_, Dp_;
};

namespace detail {

inline std::vector<Eigen::MatrixXcd> grid_star_terms(const PhaseSpaceFunction& f, const PhaseSpaceFunction& g, int R,
                                                     double resolution_tol) {
    if (R < 0) throw std::invalid_argument("star_product: order R must be non-negative");
    if (R > kMaxGridStarOrder) throw ResolutionError("star_product: order exceeds the spectral differentiation limit");
    for (const auto* fn : {&f, &g}) {
        const double tail = spectral_tail_ratio(*fn);
        if (tail > resolution_tol)
            throw ResolutionError("star_product: symbol not resolved by the grid (spectral tail ratio " +
                                  fmt_num(tail) + ")");
    }
    const SpectralCalculus calc(f.chart, R);
    const Eigen::MatrixXcd F = calc.as_matrix(f), G = calc.as_matrix(g);
    std::vector<Eigen::MatrixXcd> out;
    for (int r = 0; r <= R; ++r) {
        Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(F.rows(), F.cols());
        for (int k = 0; k <= r; ++k) {
            const int j = r - k;
            const double sign = (j % 2 == 0) ? 1.0 : -1.0;
            acc += (binomial(r, k) * sign) *
                   calc.derivative(F, k, j).cwiseProduct(calc.derivative(G, j, k));
        }
        out.push_back(acc * (i_half_power(r) / factorial(r)));
    }
    return out;
}

}  // namespace detail

/// Σ_{r≤R} ℏ^r P^r(f,g) with spectral derivatives on a periodic chart.
inline PhaseSpaceFunction star_product(const PhaseSpaceFunction& f, const PhaseSpaceFunction& g, double hbar,
                                       int R = 6, double resolution_tol = 1e-6) {
    const auto terms = detail::grid_star_terms(f, g, R, resolution_tol);
    Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(terms[0].rows(), terms[0].cols());
    double h = 1.0;
    for (const auto& t : terms) {
        acc += h * t;
        h *= hbar;
    }
    return SpectralCalculus(f.chart, 0).from_matrix(acc, hbar);
}

inline PhaseSpaceFunction moyal_bracket(const PhaseSpaceFunction& f, const PhaseSpaceFunction& g, double hbar,
                                        int R = 6, double resolution_tol = 1e-6) {
    const auto fg = detail::grid_star_terms(f, g, R, resolution_tol);
    Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(fg[0].rows(), fg[0].cols());
    for (std::size_t r = 1; r < fg.size(); r += 2)
        acc += (2.0 * std::pow(hbar, static_cast<double>(r) - 1.0)) * fg[r] * cplx(0.0, -1.0);
    return SpectralCalculus(f.chart, 0).from_matrix(acc, hbar);
}

/// ℏ-scaling of ‖f⋆g − fg‖ for symbols of commuting operators.
struct ScalingReport {
    std::vector<double> hbars;
    std::vector<double> deviations;
    std::vector<double> commutator_norms;
    std::optional<double> exponent;
    bool pass = false;
};

namespace detail {

inline void validate_hbar_sequence(const std::vector<double>& hbars) {
    if (hbars.size() < 2) throw std::invalid_argument("hbar sequence needs at least two values");
    for (std::size_t i = 0; i < hbars.size(); ++i) {
        if (!(hbars[i] > 0.0)) throw std::invalid_argument("hbar values must be positive");
        if (i > 0 && !(hbars[i] < hbars[i - 1])) throw std::invalid_argument("hbar sequence must be decreasing");
    }
}

inline void finish_scaling(ScalingReport& rep, double zero_tol) {
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < rep.hbars.size(); ++i)
        if (rep.deviations[i] > zero_tol) {
            xs.push_back(std::log(rep.hbars[i]));
            ys.push_back(std::log(rep.deviations[i]));
        }
    if (xs.size() >= 2) {
        const double n = static_cast<double>(xs.size());
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            sx += xs[i];
            sy += ys[i];
            sxx += xs[i] * xs[i];
            sxy += xs[i] * ys[i];
        }
        rep.exponent = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        rep.pass = std::abs(*rep.exponent - 2.0) <= 0.2;
    } else {
        rep.pass = std::all_of(rep.deviations.begin(), rep.deviations.end(), [&](double d) { return d <= zero_tol; });
    }
}

}  // namespace detail

/// Polynomial symbols: exact star products, deviation measured by the largest coefficient.
inline ScalingReport commuting_product_check(const PolySymbol& f, const PolySymbol& g, const std::vector<double>& hbars,
                                             double commutator_tol = 1e-10) {
    detail::validate_hbar_sequence(hbars);
    ScalingReport rep;
    const PolySymbol fg = f * g;
    for (double h : hbars) {
        const PolySymbol a = star_product(f, g, h), b = star_product(g, f, h);
        const double comm = (a - b).norm();
        if (comm > commutator_tol * std::max(1.0, f.norm() * g.norm()))
            throw PreconditionError("commuting_product_check: symbols do not commute (star commutator norm " +
                                        fmt_num(comm) + ")",
                                    comm);
        rep.hbars.push_back(h);
        rep.commutator_norms.push_back(comm);
        rep.deviations.push_back((a - fg).norm());
    }
    detail::finish_scaling(rep, 1e-300);
    return rep;
}

/// Grid symbols sampled from ℏ-independent callables; deviation is the max norm on the chart.
template <class F, class G>
ScalingReport commuting_product_check(F&& f, G&& g, const PhaseSpaceChart& chart, const std::vector<double>& hbars,
                                      int R = 6, double commutator_tol = 1e-6) {
    detail::validate_hbar_sequence(hbars);
    ScalingReport rep;
    for (double h : hbars) {
        const PhaseSpaceFunction fs = sample(chart, f, h), gs = sample(chart, g, h);
        const PhaseSpaceFunction a = star_product(fs, gs, h, R), b = star_product(gs, fs, h, R);
        double comm = 0.0, dev = 0.0;
        for (std::size_t i = 0; i < a.values.size(); ++i) {
            comm = std::max(comm, std::abs(a.values[i] - b.values[i]));
            dev = std::max(dev, std::abs(a.values[i] - fs.values[i] * gs.values[i]));
        }
        if (comm > commutator_tol * std::max(1.0, max_abs(fs) * max_abs(gs)))
            throw PreconditionError("commuting_product_check: symbols do not commute (star commutator norm " +
                                        fmt_num(comm) + ")",
                                    comm);
        rep.hbars.push_back(h);
        rep.commutator_norms.push_back(comm);
        rep.deviations.push_back(dev);
    }
    detail::finish_scaling(rep, 1e-300);
    return rep;
}

/// Growth of a symbol's norm when ℏ is halved; ℏ⁻¹ terms show up as growth near 2.
struct HbarScan {
    double norm_at_hbar = 0.0;
    double norm_at_half = 0.0;
    double growth = 1.0;
    bool hbar_dependent = false;
    bool singular = false;
};

inline HbarScan scan_hbar_dependence(const std::function<PhaseSpaceFunction(double)>& symbol_at, double hbar) {
    const PhaseSpaceFunction a = symbol_at(hbar), b = symbol_at(0.5 * hbar);
    HbarScan s;
    s.norm_at_hbar = max_abs(a);
    s.norm_at_half = max_abs(b);
    s.growth = s.norm_at_hbar > 0.0 ? s.norm_at_half / s.norm_at_hbar : (s.norm_at_half > 0.0 ? INFINITY : 1.0);
    double diff = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) diff = std::max(diff, std::abs(a.values[i] - b.values[i]));
    s.hbar_dependent = diff > 1e-12 * std::max(1.0, s.norm_at_hbar);
    s.singular = s.growth > 1.5;
    return s;
}

}  // namespace sidlab
