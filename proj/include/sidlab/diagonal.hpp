#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "algebra.hpp"

namespace sidlab {

/// Unitary kernel U(ω,p,o) to the pointer basis; p is an eigen-index axis with unit weights.
struct PointerMap {
    SpectralGrid omega;
    SpectralGrid o;
    SpectralGrid p;
    Kernel3 U;  ///< U(ω,p,o), stored with p as the first label index
};

/// Fully diagonal decohered state ρ(ω,p).
struct DiagonalState {
    SpectralGrid omega;
    SpectralGrid p;
    std::vector<double> values;    ///< ρ(ω,p), index ω·n_p + p
    std::vector<double> p_values;  ///< expectation of o in each pointer vector (the label value of p)

    double at(std::size_t w, std::size_t p_idx) const { return values[w * p.size() + p_idx]; }
    double label(std::size_t w, std::size_t p_idx) const { return p_values[w * p.size() + p_idx]; }

    /// Σ_ω w_ω Σ_p ρ(ω,p).
    double total() const {
        double s = 0.0;
        for (std::size_t w = 0; w < omega.size(); ++w)
            for (std::size_t q = 0; q < p.size(); ++q) s += omega.weight(w) * p.weight(q) * at(w, q);
        return s;
    }
};

/// Identity pointer map, U(ω,p,o) = δ_{po}/w_o.
inline PointerMap identity_pointer_map(const SpectralGrid& omega, const SpectralGrid& o) {
    PointerMap m{omega, o, index_grid(o.size(), "p"), Kernel3(omega.size(), o.size())};
    for (std::size_t w = 0; w < omega.size(); ++w)
        for (std::size_t a = 0; a < o.size(); ++a) m.U(w, a, a) = 1.0 / std::sqrt(o.weight(a));
    return m;
}

/// max |Σ_o U(ω,p,o) conj U(ω,p′,o) w_o − δ_{pp′}/w_p| over ω, p, p′.
inline double unitarity_residual(const PointerMap& m) {
    double r = 0.0;
    for (std::size_t w = 0; w < m.omega.size(); ++w)
        for (std::size_t p = 0; p < m.p.size(); ++p)
            for (std::size_t q = 0; q < m.p.size(); ++q) {
                cplx s = 0.0;
                for (std::size_t a = 0; a < m.o.size(); ++a)
                    s += m.U(w, p, a) * std::conj(m.U(w, q, a)) * m.o.weight(a);
                const double target = (p == q) ? 1.0 / m.p.weight(p) : 0.0;
                r = std::max(r, std::abs(s - target));
            }
    return r;
}

namespace detail {

inline bool lexicographically_greater(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b, double tol) {
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        if (std::abs(a(i).real() - b(i).real()) > tol) return a(i).real() > b(i).real();
        if (std::abs(a(i).imag() - b(i).imag()) > tol) return a(i).imag() > b(i).imag();
    }
    return false;
}

inline void fix_phase(Eigen::Ref<Eigen::VectorXcd> v) {
    Eigen::Index best = 0;
    double mag = -1.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        const double m = std::abs(v(i));
        if (m > mag * (1.0 + 1e-12)) {
            mag = m;
            best = i;
        }
    }
    if (mag > 0.0) v *= std::conj(v(best)) / mag;
}

}  // namespace detail

/// Per-ω Hermitian eigendecomposition of diag(√w)ρ diag(√w); eigenvalues descending.
inline std::pair<PointerMap, DiagonalState> find_pointer_basis(const StateFunctional& rho_star,
                                                               double tol = 1e-10) {
    if (rho_star.form != SingularForm::grid_kernel)
        throw std::invalid_argument("find_pointer_basis: requires a grid singular kernel");
    if (rho_star.regular.n_omega() > 0 && rho_star.regular.max_abs() > 0.0)
        throw std::invalid_argument("find_pointer_basis: state has a nonzero regular part; decohere it first");
    const double herm = hermiticity_residual(rho_star.singular);
    const double scale = std::max(1.0, rho_star.singular.max_abs());
    if (herm > tol * scale)
        throw InvalidStateError("find_pointer_basis: singular kernel is not Hermitian (residual " +
                                fmt_num(herm) + ")");

    const std::size_t nw = rho_star.omega.size();
    const std::size_t no = rho_star.o.size();
    PointerMap map{rho_star.omega, rho_star.o, index_grid(no, "p"), Kernel3(nw, no)};
    DiagonalState diag{rho_star.omega, map.p, std::vector<double>(nw * no, 0.0), std::vector<double>(nw * no, 0.0)};

    for (std::size_t w = 0; w < nw; ++w) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(weighted_block(rho_star, w));
        const Eigen::VectorXd& lam = es.eigenvalues();
        Eigen::MatrixXcd E = es.eigenvectors();
        const double lam_scale = std::max(1.0, lam.cwiseAbs().maxCoeff());
        if (lam.minCoeff() < -tol * lam_scale)
            throw InvalidStateError("find_pointer_basis: negative eigenvalue " + fmt_num(lam.minCoeff()) +
                                    " at omega=" + fmt_num(rho_star.omega.node(w)));
        for (Eigen::Index k = 0; k < E.cols(); ++k) detail::fix_phase(E.col(k));

        std::vector<Eigen::Index> order(static_cast<std::size_t>(lam.size()));
        std::iota(order.begin(), order.end(), 0);
        const double tie = 1e-12 * lam_scale;
        std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
            if (std::abs(lam(a) - lam(b)) > tie) return lam(a) > lam(b);
            return detail::lexicographically_greater(E.col(a), E.col(b), 1e-12);
        });

        for (std::size_t p = 0; p < no; ++p) {
            const Eigen::Index k = order[p];
            const double value = std::max(0.0, lam(k));
            diag.values[w * no + p] = value / map.p.weight(p);
            double label = 0.0;
            for (std::size_t a = 0; a < no; ++a) {
                const cplx e = E(static_cast<Eigen::Index>(a), k);
                map.U(w, p, a) = std::conj(e) / std::sqrt(rho_star.o.weight(a));
                label += std::norm(e) * rho_star.o.node(a);
            }
            diag.p_values[w * no + p] = label;
        }
    }
    return {std::move(map), std::move(diag)};
}

namespace detail {

inline void require_map_grids(const PointerMap& U, const SpectralGrid& omega, const SpectralGrid& o) {
    if (!U.omega.compatible(omega) || !U.o.compatible(o))
        throw std::invalid_argument("pointer transform: grid mismatch");
}

/// out(p,p′) = Σ L(p,o) w_o K(o,o′) w_o′ R(p′,o′) with L,R chosen by the caller.
template <class LF, class RF, class KF>
Eigen::MatrixXcd sandwich(std::size_t np, const SpectralGrid& o, LF&& left, KF&& kernel, RF&& right) {
    const std::size_t no = o.size();
    Eigen::MatrixXcd Lm(static_cast<Eigen::Index>(np), static_cast<Eigen::Index>(no));
    Eigen::MatrixXcd Km(static_cast<Eigen::Index>(no), static_cast<Eigen::Index>(no));
    Eigen::MatrixXcd Rm(static_cast<Eigen::Index>(no), static_cast<Eigen::Index>(np));
    for (std::size_t p = 0; p < np; ++p)
        for (std::size_t a = 0; a < no; ++a) Lm(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(a)) = left(p, a) * o.weight(a);
    for (std::size_t a = 0; a < no; ++a)
        for (std::size_t b = 0; b < no; ++b) Km(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = kernel(a, b);
    for (std::size_t b = 0; b < no; ++b)
        for (std::size_t q = 0; q < np; ++q) Rm(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(q)) = o.weight(b) * right(q, b);
    return Lm * Km * Rm;
}

}  // namespace detail

/// A(ω,p,p′) = Σ conj U(ω,p,o) w_o A(ω,o,o′) w_o′ U(ω,p′,o′), and likewise per (ω,ω′) for the regular part.
inline Observable transform_observable(const Observable& A, const PointerMap& U) {
    detail::require_map_grids(U, A.omega, A.o);
    const std::size_t nw = A.omega.size(), np = U.p.size();
    Observable out{A.omega, U.p, Kernel3(nw, np), Kernel4(nw, np), false};
    for (std::size_t w = 0; w < nw; ++w) {
        const Eigen::MatrixXcd M = detail::sandwich(
            np, A.o, [&](std::size_t p, std::size_t a) { return std::conj(U.U(w, p, a)); },
            [&](std::size_t a, std::size_t b) { return A.singular(w, a, b); },
            [&](std::size_t q, std::size_t b) { return U.U(w, q, b); });
        for (std::size_t p = 0; p < np; ++p)
            for (std::size_t q = 0; q < np; ++q) out.singular(w, p, q) = M(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(q));
    }
    if (!A.regular.is_zero()) {
        for (std::size_t w = 0; w < nw; ++w)
            for (std::size_t v = 0; v < nw; ++v) {
                const Eigen::MatrixXcd M = detail::sandwich(
                    np, A.o, [&](std::size_t p, std::size_t a) { return std::conj(U.U(w, p, a)); },
                    [&](std::size_t a, std::size_t b) { return A.regular(w, v, a, b); },
                    [&](std::size_t q, std::size_t b) { return U.U(v, q, b); });
                for (std::size_t p = 0; p < np; ++p)
                    for (std::size_t q = 0; q < np; ++q)
                        out.regular(w, v, p, q) = M(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(q));
            }
    }
    if (A.singular_delta) {
        double off = 0.0, scale = 0.0;
        for (std::size_t w = 0; w < nw; ++w)
            for (std::size_t p = 0; p < np; ++p)
                for (std::size_t q = 0; q < np; ++q) {
                    scale = std::max(scale, std::abs(out.singular(w, p, q)));
                    if (p != q) off = std::max(off, std::abs(out.singular(w, p, q)));
                }
        out.singular_delta = off <= 1e-12 * std::max(1.0, scale);
    }
    return out;
}

/// ρ(ω,p,p′) = Σ U(ω,p,o) w_o ρ(ω,o,o′) w_o′ conj U(ω,p′,o′); dual to transform_observable under the pairing.
inline StateFunctional transform_state(const StateFunctional& rho, const PointerMap& U) {
    if (rho.form != SingularForm::grid_kernel)
        throw std::invalid_argument("transform_state: requires a grid singular kernel");
    detail::require_map_grids(U, rho.omega, rho.o);
    const std::size_t nw = rho.omega.size(), np = U.p.size();
    StateFunctional out = zero_state(rho.omega, U.p);
    for (std::size_t w = 0; w < nw; ++w) {
        const Eigen::MatrixXcd M = detail::sandwich(
            np, rho.o, [&](std::size_t p, std::size_t a) { return U.U(w, p, a); },
            [&](std::size_t a, std::size_t b) { return rho.singular(w, a, b); },
            [&](std::size_t q, std::size_t b) { return std::conj(U.U(w, q, b)); });
        for (std::size_t p = 0; p < np; ++p)
            for (std::size_t q = 0; q < np; ++q) out.singular(w, p, q) = M(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(q));
    }
    if (rho.regular.n_omega() > 0 && !rho.regular.is_zero()) {
        for (std::size_t w = 0; w < nw; ++w)
            for (std::size_t v = 0; v < nw; ++v) {
                const Eigen::MatrixXcd M = detail::sandwich(
                    np, rho.o, [&](std::size_t p, std::size_t a) { return U.U(w, p, a); },
                    [&](std::size_t a, std::size_t b) { return rho.regular(w, v, a, b); },
                    [&](std::size_t q, std::size_t b) { return std::conj(U.U(v, q, b)); });
                for (std::size_t p = 0; p < np; ++p)
                    for (std::size_t q = 0; q < np; ++q)
                        out.regular(w, v, p, q) = M(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(q));
            }
    }
    return out;
}

/// Frobenius norm of the p ≠ p′ entries of the singular kernel.
inline double offdiagonal_mass(const StateFunctional& rho) {
    double s = 0.0;
    for (std::size_t w = 0; w < rho.omega.size(); ++w)
        for (std::size_t p = 0; p < rho.o.size(); ++p)
            for (std::size_t q = 0; q < rho.o.size(); ++q)
                if (p != q) s += std::norm(rho.singular(w, p, q));
    return std::sqrt(s);
}

/// Inverse map: ρ(ω,o,o′) = Σ_p conj U(ω,p,o) ρ(ω,p) U(ω,p,o′) w_p.
inline StateFunctional reconstruct_state(const PointerMap& U, const DiagonalState& diag) {
    StateFunctional out = zero_state(U.omega, U.o);
    for (std::size_t w = 0; w < U.omega.size(); ++w)
        for (std::size_t a = 0; a < U.o.size(); ++a)
            for (std::size_t b = 0; b < U.o.size(); ++b) {
                cplx s = 0.0;
                for (std::size_t p = 0; p < U.p.size(); ++p)
                    s += std::conj(U.U(w, p, a)) * diag.at(w, p) * U.p.weight(p) * U.U(w, p, b);
                out.singular(w, a, b) = s;
            }
    return out;
}

/// Embed a DiagonalState as a grid state on (ω, p).
inline StateFunctional diagonal_as_state(const DiagonalState& diag) {
    StateFunctional out = zero_state(diag.omega, diag.p);
    for (std::size_t w = 0; w < diag.omega.size(); ++w)
        for (std::size_t p = 0; p < diag.p.size(); ++p) out.singular(w, p, p) = diag.at(w, p) / diag.p.weight(p);
    return out;
}

}  // namespace sidlab
