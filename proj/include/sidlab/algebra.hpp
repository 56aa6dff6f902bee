#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "kernel.hpp"
#include "spectral.hpp"

namespace sidlab {

/// Observable with singular kernel A(ω,o,o′) and regular kernel A(ω,ω′,o,o′).
///
/// When `singular_delta` is set the singular kernel represents a(ω,o)·δ(o−o′) and stores
/// a(ω,o)/w_o on the diagonal, so grid pairings are unchanged while point masses see a(ω,o).
struct Observable {
    SpectralGrid omega;
    SpectralGrid o;
    Kernel3 singular;
    Kernel4 regular;
    bool singular_delta = false;
};

enum class SingularForm { grid_kernel, point_masses };

/// The functional (η, s, s′| scaled by `weight`.
struct PointMass {
    double eta = 0.0;
    double s = 0.0;
    double s_prime = 0.0;
    cplx weight = 1.0;
};

struct StateFunctional {
    SpectralGrid omega;
    SpectralGrid o;
    SingularForm form = SingularForm::grid_kernel;
    Kernel3 singular;
    std::vector<PointMass> masses;
    Kernel4 regular;
};

inline Observable zero_observable(const SpectralGrid& omega, const SpectralGrid& o) {
    return Observable{omega, o, Kernel3(omega.size(), o.size()), Kernel4(omega.size(), o.size()), false};
}

inline StateFunctional zero_state(const SpectralGrid& omega, const SpectralGrid& o) {
    return StateFunctional{omega, o, SingularForm::grid_kernel, Kernel3(omega.size(), o.size()), {},
                           Kernel4(omega.size(), o.size())};
}

/// The identity: δ(o−o′) on the singular sector, zero regular part.
inline Observable identity_observable(const SpectralGrid& omega, const SpectralGrid& o) {
    Observable id = zero_observable(omega, o);
    for (std::size_t w = 0; w < omega.size(); ++w)
        for (std::size_t a = 0; a < o.size(); ++a) id.singular(w, a, a) = 1.0 / o.weight(a);
    id.singular_delta = true;
    return id;
}

/// Fill kernels from callables fs(ω,o,o′) and fr(ω,ω′,o,o′).
template <class FS, class FR>
Observable make_observable(const SpectralGrid& omega, const SpectralGrid& o, FS&& fs, FR&& fr) {
    Observable A = zero_observable(omega, o);
    for (std::size_t w = 0; w < omega.size(); ++w)
        for (std::size_t a = 0; a < o.size(); ++a)
            for (std::size_t b = 0; b < o.size(); ++b)
                A.singular(w, a, b) = fs(omega.node(w), o.node(a), o.node(b));
    for (std::size_t w = 0; w < omega.size(); ++w)
        for (std::size_t v = 0; v < omega.size(); ++v)
            for (std::size_t a = 0; a < o.size(); ++a)
                for (std::size_t b = 0; b < o.size(); ++b)
                    A.regular(w, v, a, b) = fr(omega.node(w), omega.node(v), o.node(a), o.node(b));
    return A;
}

template <class FS, class FR>
StateFunctional make_state(const SpectralGrid& omega, const SpectralGrid& o, FS&& fs, FR&& fr) {
    Observable tmp = make_observable(omega, o, std::forward<FS>(fs), std::forward<FR>(fr));
    StateFunctional rho = zero_state(omega, o);
    rho.singular = std::move(tmp.singular);
    rho.regular = std::move(tmp.regular);
    return rho;
}

inline StateFunctional point_mass_state(const SpectralGrid& omega, const SpectralGrid& o,
                                        std::vector<PointMass> masses) {
    StateFunctional rho = zero_state(omega, o);
    rho.form = SingularForm::point_masses;
    rho.singular = Kernel3();
    rho.masses = std::move(masses);
    return rho;
}

namespace detail {

struct Bracket {
    std::size_t i0 = 0, i1 = 0;
    double t = 0.0;
};

inline Bracket bracket(const SpectralGrid& g, double x) {
    const double tol = 1e-12 * std::max(1.0, std::abs(x));
    if (x < g.front() - tol || x > g.back() + tol)
        throw std::invalid_argument("point mass outside the grid support on axis '" + g.label() + "'");
    if (g.size() == 1) return {0, 0, 0.0};
    auto it = std::upper_bound(g.nodes().begin(), g.nodes().end(), x);
    std::size_t i1 = static_cast<std::size_t>(it - g.nodes().begin());
    if (i1 == 0) i1 = 1;
    if (i1 >= g.size()) i1 = g.size() - 1;
    const std::size_t i0 = i1 - 1;
    const double t = std::clamp((x - g.node(i0)) / (g.node(i1) - g.node(i0)), 0.0, 1.0);
    return {i0, i1, t};
}

inline void require_compatible(const SpectralGrid& a, const SpectralGrid& b, const char* what) {
    if (!a.compatible(b)) throw std::invalid_argument(std::string(what) + ": grid mismatch");
}

/// Multilinear interpolation of the observable's singular kernel at one point mass.
inline cplx singular_at(const Observable& A, const PointMass& m) {
    const Bracket bw = bracket(A.omega, m.eta);
    const Bracket bs = bracket(A.o, m.s);
    if (A.singular_delta) {
        const double tol = 1e-12 * std::max(1.0, std::abs(m.s));
        if (std::abs(m.s - m.s_prime) > tol) return 0.0;
        auto a = [&](std::size_t w, std::size_t i) { return A.singular(w, i, i) * A.o.weight(i); };
        const cplx lo = (1.0 - bs.t) * a(bw.i0, bs.i0) + bs.t * a(bw.i0, bs.i1);
        const cplx hi = (1.0 - bs.t) * a(bw.i1, bs.i0) + bs.t * a(bw.i1, bs.i1);
        return (1.0 - bw.t) * lo + bw.t * hi;
    }
    const Bracket bp = bracket(A.o, m.s_prime);
    cplx acc = 0.0;
    for (int dw = 0; dw < 2; ++dw)
        for (int da = 0; da < 2; ++da)
            for (int db = 0; db < 2; ++db) {
                const double c = (dw ? bw.t : 1.0 - bw.t) * (da ? bs.t : 1.0 - bs.t) * (db ? bp.t : 1.0 - bp.t);
                if (c == 0.0) continue;
                acc += c * A.singular(dw ? bw.i1 : bw.i0, da ? bs.i1 : bs.i0, db ? bp.i1 : bp.i0);
            }
    return acc;
}

inline cplx pair_singular_grid(const Kernel3& rho, const Kernel3& A, const SpectralGrid& omega,
                               const SpectralGrid& o) {
    cplx s = 0.0;
    for (std::size_t w = 0; w < omega.size(); ++w) {
        cplx sw = 0.0;
        for (std::size_t a = 0; a < o.size(); ++a)
            for (std::size_t b = 0; b < o.size(); ++b)
                sw += o.weight(a) * o.weight(b) * rho(w, a, b) * A(w, a, b);
        s += omega.weight(w) * sw;
    }
    return s;
}

inline cplx pair_regular(const Kernel4& rho, const Kernel4& A, const SpectralGrid& omega,
                         const SpectralGrid& o) {
    cplx s = 0.0;
    for (std::size_t w = 0; w < omega.size(); ++w)
        for (std::size_t v = 0; v < omega.size(); ++v) {
            cplx sv = 0.0;
            for (std::size_t a = 0; a < o.size(); ++a)
                for (std::size_t b = 0; b < o.size(); ++b)
                    sv += o.weight(a) * o.weight(b) * rho(w, v, a, b) * A(w, v, a, b);
            s += omega.weight(w) * omega.weight(v) * sv;
        }
    return s;
}

}  // namespace detail

/// Singular-sector part of the pairing.
inline cplx pair_singular(const StateFunctional& rho, const Observable& A) {
    if (rho.form == SingularForm::point_masses) {
        cplx s = 0.0;
        for (const auto& m : rho.masses) s += m.weight * detail::singular_at(A, m);
        return s;
    }
    detail::require_compatible(rho.omega, A.omega, "pair");
    detail::require_compatible(rho.o, A.o, "pair");
    return detail::pair_singular_grid(rho.singular, A.singular, A.omega, A.o);
}

inline cplx pair_regular(const StateFunctional& rho, const Observable& A) {
    if (rho.regular.n_omega() == 0 || rho.regular.is_zero()) return 0.0;
    detail::require_compatible(rho.omega, A.omega, "pair");
    detail::require_compatible(rho.o, A.o, "pair");
    return detail::pair_regular(rho.regular, A.regular, A.omega, A.o);
}

/// (ρ|A) = Σ w ρ(ω,o,o′) A(ω,o,o′) + Σ w ρ(ω,ω′,o,o′) A(ω,ω′,o,o′).
inline cplx pair(const StateFunctional& rho, const Observable& A) {
    return pair_singular(rho, A) + pair_regular(rho, A);
}

inline std::pair<Observable, Observable> split(const Observable& A) {
    Observable s = A;
    Observable r = A;
    s.regular = Kernel4(A.omega.size(), A.o.size());
    r.singular = Kernel3(A.omega.size(), A.o.size());
    r.singular_delta = false;
    return {std::move(s), std::move(r)};
}

inline Observable combine(cplx a, const Observable& x, cplx b, const Observable& y) {
    detail::require_compatible(x.omega, y.omega, "combine");
    detail::require_compatible(x.o, y.o, "combine");
    Observable out = x;
    out.singular = axpby(a, x.singular, b, y.singular);
    out.regular = axpby(a, x.regular, b, y.regular);
    out.singular_delta = x.singular_delta && y.singular_delta;
    return out;
}

inline StateFunctional combine(cplx a, const StateFunctional& x, cplx b, const StateFunctional& y) {
    detail::require_compatible(x.omega, y.omega, "combine");
    detail::require_compatible(x.o, y.o, "combine");
    StateFunctional out = x;
    if (x.form == SingularForm::grid_kernel && y.form == SingularForm::grid_kernel) {
        out.singular = axpby(a, x.singular, b, y.singular);
    } else if (x.form == SingularForm::point_masses && y.form == SingularForm::point_masses) {
        out.masses.clear();
        for (auto m : x.masses) { m.weight *= a; out.masses.push_back(m); }
        for (auto m : y.masses) { m.weight *= b; out.masses.push_back(m); }
    } else {
        throw std::invalid_argument("combine: mixed singular representations");
    }
    out.regular = axpby(a, x.regular, b, y.regular);
    return out;
}

inline StateFunctional scaled(const StateFunctional& x, cplx a) {
    StateFunctional out = x;
    for (auto& v : out.singular.data()) v *= a;
    for (auto& m : out.masses) m.weight *= a;
    for (auto& v : out.regular.data()) v *= a;
    return out;
}

inline double hermiticity_residual(const Kernel3& k) {
    double r = 0.0;
    for (std::size_t w = 0; w < k.n_omega(); ++w)
        for (std::size_t a = 0; a < k.n_o(); ++a)
            for (std::size_t b = 0; b < k.n_o(); ++b)
                r = std::max(r, std::abs(k(w, a, b) - std::conj(k(w, b, a))));
    return r;
}

inline double hermiticity_residual(const Kernel4& k) {
    double r = 0.0;
    for (std::size_t w = 0; w < k.n_omega(); ++w)
        for (std::size_t v = 0; v < k.n_omega(); ++v)
            for (std::size_t a = 0; a < k.n_o(); ++a)
                for (std::size_t b = 0; b < k.n_o(); ++b)
                    r = std::max(r, std::abs(k(w, v, a, b) - std::conj(k(v, w, b, a))));
    return r;
}

inline double hermiticity_residual(const Observable& A) {
    return std::max(hermiticity_residual(A.singular), hermiticity_residual(A.regular));
}

/// Per-ω weighted matrix diag(√w)·ρ(ω,·,·)·diag(√w), Hermitized.
inline Eigen::MatrixXcd weighted_block(const StateFunctional& rho, std::size_t w) {
    const std::size_t n = rho.o.size();
    Eigen::MatrixXcd M(n, n);
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b)
            M(a, b) = std::sqrt(rho.o.weight(a) * rho.o.weight(b)) * rho.singular(w, a, b);
    return 0.5 * (M + M.adjoint());
}

struct StateDiagnostics {
    double hermiticity_residual = 0.0;
    double min_eigenvalue = 0.0;
    double normalization_residual = 0.0;

    bool hermitian(double tol = 1e-12) const { return hermiticity_residual <= tol; }
    bool positive(double tol = 1e-12) const { return min_eigenvalue >= -tol; }
    bool normalized(double tol = 1e-10) const { return normalization_residual <= tol; }
};

inline StateDiagnostics check_state(const StateFunctional& rho) {
    StateDiagnostics d;
    d.min_eigenvalue = std::numeric_limits<double>::infinity();
    if (rho.form == SingularForm::grid_kernel) {
        d.hermiticity_residual = hermiticity_residual(rho.singular);
        for (std::size_t w = 0; w < rho.omega.size(); ++w) {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(weighted_block(rho, w), Eigen::EigenvaluesOnly);
            d.min_eigenvalue = std::min(d.min_eigenvalue, es.eigenvalues().minCoeff());
        }
    } else {
        // Group masses by energy; each group is a finite matrix over the labels it touches.
        std::map<double, std::map<std::pair<double, double>, cplx>> groups;
        for (const auto& m : rho.masses) groups[m.eta][{m.s, m.s_prime}] += m.weight;
        for (const auto& [eta, entries] : groups) {
            std::vector<double> labels;
            for (const auto& [key, c] : entries) {
                labels.push_back(key.first);
                labels.push_back(key.second);
            }
            std::sort(labels.begin(), labels.end());
            labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
            const auto idx = [&](double s) {
                return static_cast<Eigen::Index>(std::lower_bound(labels.begin(), labels.end(), s) - labels.begin());
            };
            Eigen::MatrixXcd M = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(labels.size()),
                                                        static_cast<Eigen::Index>(labels.size()));
            for (const auto& [key, c] : entries) M(idx(key.first), idx(key.second)) += c;
            d.hermiticity_residual = std::max(d.hermiticity_residual, (M - M.adjoint()).cwiseAbs().maxCoeff());
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (M + M.adjoint()), Eigen::EigenvaluesOnly);
            d.min_eigenvalue = std::min(d.min_eigenvalue, es.eigenvalues().minCoeff());
        }
    }
    if (!std::isfinite(d.min_eigenvalue)) d.min_eigenvalue = 0.0;
    d.hermiticity_residual = std::max(d.hermiticity_residual, hermiticity_residual(rho.regular));
    const cplx tr = pair(rho, identity_observable(rho.omega, rho.o));
    d.normalization_residual = std::abs(tr - 1.0);
    return d;
}

/// Scale both kernels so that (ρ|I) = 1.
inline StateFunctional normalize(const StateFunctional& rho) {
    const cplx tr = pair(rho, identity_observable(rho.omega, rho.o));
    if (std::abs(tr) < 1e-300 || !std::isfinite(std::abs(tr)))
        throw DegenerateStateError("normalize: pairing with the identity vanishes");
    return scaled(rho, 1.0 / tr);
}

}  // namespace sidlab
