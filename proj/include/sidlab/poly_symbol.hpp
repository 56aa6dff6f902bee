#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <numeric>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace sidlab {

using cplx = std::complex<double>;

/// Sparse polynomial in (q_1..q_n, p_1..p_n) with complex coefficients.
class PolySymbol {
public:
    using Exponents = std::vector<int>;
    using TermMap = std::map<Exponents, cplx>;

    explicit PolySymbol(std::size_t dof = 1) : dof_(dof) {}

    static PolySymbol constant(cplx c, std::size_t dof = 1) {
        PolySymbol s(dof);
        s.add_term(Exponents(2 * dof, 0), c);
        return s;
    }
    static PolySymbol q(std::size_t i = 0, std::size_t dof = 1) {
        Exponents e(2 * dof, 0);
        e.at(i) = 1;
        return monomial(e, 1.0);
    }
    static PolySymbol p(std::size_t i = 0, std::size_t dof = 1) {
        Exponents e(2 * dof, 0);
        e.at(dof + i) = 1;
        return monomial(e, 1.0);
    }
    static PolySymbol monomial(const Exponents& e, cplx c) {
        if (e.size() % 2 != 0) throw std::invalid_argument("PolySymbol: exponent vector must have even length");
        PolySymbol s(e.size() / 2);
        s.add_term(e, c);
        return s;
    }

    std::size_t dof() const { return dof_; }
    const TermMap& terms() const { return terms_; }

    void add_term(const Exponents& e, cplx c) {
        if (e.size() != 2 * dof_) throw std::invalid_argument("PolySymbol: exponent length mismatch");
        for (int k : e)
            if (k < 0) throw std::invalid_argument("PolySymbol: negative exponent");
        if (c == cplx(0.0)) return;
        auto [it, inserted] = terms_.emplace(e, c);
        if (!inserted) {
            it->second += c;
            if (it->second == cplx(0.0)) terms_.erase(it);
        }
    }

    cplx coefficient(const Exponents& e) const {
        auto it = terms_.find(e);
        return it == terms_.end() ? cplx(0.0) : it->second;
    }

    int total_degree() const {
        int d = 0;
        for (const auto& [e, c] : terms_) d = std::max(d, std::accumulate(e.begin(), e.end(), 0));
        return d;
    }

    /// Largest coefficient modulus.
    double norm() const {
        double m = 0.0;
        for (const auto& [e, c] : terms_) m = std::max(m, std::abs(c));
        return m;
    }

    bool is_zero(double tol = 0.0) const { return norm() <= tol; }

    PolySymbol pruned(double tol) const {
        PolySymbol out(dof_);
        for (const auto& [e, c] : terms_)
            if (std::abs(c) > tol) out.terms_.emplace(e, c);
        return out;
    }

    /// True when no monomial mixes q- and p-powers, i.e. H = T(p) + V(q).
    bool separable() const {
        for (const auto& [e, c] : terms_) {
            bool has_q = false, has_p = false;
            for (std::size_t i = 0; i < dof_; ++i) {
                has_q = has_q || e[i] > 0;
                has_p = has_p || e[dof_ + i] > 0;
            }
            if (has_q && has_p) return false;
        }
        return true;
    }

    bool depends_on_p() const {
        for (const auto& [e, c] : terms_)
            for (std::size_t i = 0; i < dof_; ++i)
                if (e[dof_ + i] > 0) return true;
        return false;
    }

    PolySymbol derivative(std::size_t axis, int order = 1) const {
        if (axis >= 2 * dof_) throw std::invalid_argument("PolySymbol::derivative: axis out of range");
        PolySymbol out(dof_);
        for (const auto& [e, c] : terms_) {
            if (e[axis] < order) continue;
            double f = 1.0;
            for (int k = 0; k < order; ++k) f *= static_cast<double>(e[axis] - k);
            Exponents ne = e;
            ne[axis] -= order;
            out.add_term(ne, c * f);
        }
        return out;
    }

    cplx evaluate(std::span<const double> phi) const {
        if (phi.size() != 2 * dof_) throw std::invalid_argument("PolySymbol::evaluate: point dimension mismatch");
        cplx s = 0.0;
        for (const auto& [e, c] : terms_) {
            double m = 1.0;
            for (std::size_t i = 0; i < e.size(); ++i)
                for (int k = 0; k < e[i]; ++k) m *= phi[i];
            s += c * m;
        }
        return s;
    }

    cplx evaluate(double q, double p) const {
        const double phi[2] = {q, p};
        return evaluate(std::span<const double>(phi, 2));
    }

    PolySymbol& operator+=(const PolySymbol& o) {
        check_dof(o);
        for (const auto& [e, c] : o.terms_) add_term(e, c);
        return *this;
    }
    PolySymbol& operator-=(const PolySymbol& o) {
        check_dof(o);
        for (const auto& [e, c] : o.terms_) add_term(e, -c);
        return *this;
    }
    PolySymbol& operator*=(cplx a) {
        if (a == cplx(0.0)) {
            terms_.clear();
            return *this;
        }
        for (auto& [e, c] : terms_) c *= a;
        return *this;
    }

    friend PolySymbol operator+(PolySymbol a, const PolySymbol& b) { return a += b; }
    friend PolySymbol operator-(PolySymbol a, const PolySymbol& b) { return a -= b; }
    friend PolySymbol operator*(PolySymbol a, cplx s) { return a *= s; }
    friend PolySymbol operator*(cplx s, PolySymbol a) { return a *= s; }
    friend PolySymbol operator*(PolySymbol a, double s) { return a *= cplx(s); }
    friend PolySymbol operator*(double s, PolySymbol a) { return a *= cplx(s); }

    /// Pointwise product.
    friend PolySymbol operator*(const PolySymbol& a, const PolySymbol& b) {
        a.check_dof(b);
        PolySymbol out(a.dof_);
        for (const auto& [ea, ca] : a.terms_)
            for (const auto& [eb, cb] : b.terms_) {
                Exponents e(ea.size());
                for (std::size_t i = 0; i < e.size(); ++i) e[i] = ea[i] + eb[i];
                out.add_term(e, ca * cb);
            }
        return out;
    }

    friend bool operator==(const PolySymbol& a, const PolySymbol& b) {
        return a.dof_ == b.dof_ && a.terms_ == b.terms_;
    }

    /// Largest coefficient difference, the distance used for near-equality.
    friend double distance(const PolySymbol& a, const PolySymbol& b) { return (a - b).norm(); }

    std::string to_string() const {
        if (terms_.empty()) return "0";
        std::ostringstream os;
        os.precision(17);
        bool first = true;
        for (const auto& [e, c] : terms_) {
            if (!first) os << " + ";
            first = false;
            os << "(" << c.real() << (c.imag() < 0 ? "-" : "+") << std::abs(c.imag()) << "i)";
            for (std::size_t i = 0; i < dof_; ++i) {
                if (e[i]) os << "*q" << (dof_ > 1 ? std::to_string(i + 1) : "") << "^" << e[i];
            }
            for (std::size_t i = 0; i < dof_; ++i) {
                if (e[dof_ + i]) os << "*p" << (dof_ > 1 ? std::to_string(i + 1) : "") << "^" << e[dof_ + i];
            }
        }
        return os.str();
    }

private:
    void check_dof(const PolySymbol& o) const {
        if (o.dof_ != dof_) throw std::invalid_argument("PolySymbol: degree-of-freedom mismatch");
    }

    std::size_t dof_;
    TermMap terms_;
};

namespace detail {

inline double falling(int n, int k) {
    double f = 1.0;
    for (int j = 0; j < k; ++j) f *= static_cast<double>(n - j);
    return f;
}

inline double binomial(int n, int k) {
    if (k < 0 || k > n) return 0.0;
    double b = 1.0;
    for (int j = 1; j <= k; ++j) b = b * static_cast<double>(n - k + j) / static_cast<double>(j);
    return b;
}

inline double factorial(int n) {
    double f = 1.0;
    for (int j = 2; j <= n; ++j) f *= static_cast<double>(j);
    return f;
}

inline cplx i_half_power(int r) {
    static const cplx units[4] = {1.0, cplx(0.0, 1.0), -1.0, cplx(0.0, -1.0)};
    return units[r % 4] * std::pow(0.5, r);
}

struct StarMonomialWalker {
    const PolySymbol::Exponents& ef;
    const PolySymbol::Exponents& eg;
    std::size_t dof;
    int R;
    std::vector<PolySymbol>& out;
    PolySymbol::Exponents result;

    void walk(std::size_t i, int order, cplx coef) {
        if (i == dof) {
            out[static_cast<std::size_t>(order)].add_term(result, coef);
            return;
        }
        const int a = ef[i], b = ef[dof + i];  // f: q^a p^b
        const int c = eg[i], d = eg[dof + i];  // g: q^c p^d
        const int r_max = std::min(a, d) + std::min(b, c);
        for (int r = 0; r <= r_max && order + r <= R; ++r) {
            for (int k = 0; k <= r; ++k) {
                const int j = r - k;
                if (k > a || j > b || k > d || j > c) continue;
                const double sign = (j % 2 == 0) ? 1.0 : -1.0;
                const double mult = binomial(r, k) * sign * falling(a, k) * falling(b, j) * falling(d, k) * falling(c, j);
                result[i] = (a - k) + (c - j);
                result[dof + i] = (b - j) + (d - k);
                walk(i + 1, order + r, coef * i_half_power(r) / factorial(r) * mult);
            }
        }
    }
};

}  // namespace detail

/// Coefficients P^r (r = 0..R) of f⋆g = Σ ℏ^r P^r(f,g), with the bidifferential
/// exp((iℏ/2)(←∂_q →∂_p − ←∂_p →∂_q)) so that q⋆p − p⋆q = iℏ.
inline std::vector<PolySymbol> star_terms(const PolySymbol& f, const PolySymbol& g, int R) {
    if (R < 0) throw std::invalid_argument("star_terms: order R must be non-negative");
    if (f.dof() != g.dof()) throw std::invalid_argument("star_terms: degree-of-freedom mismatch");
    std::vector<PolySymbol> out(static_cast<std::size_t>(R) + 1, PolySymbol(f.dof()));
    for (const auto& [ef, cf] : f.terms())
        for (const auto& [eg, cg] : g.terms()) {
            detail::StarMonomialWalker w{ef, eg, f.dof(), R, out, PolySymbol::Exponents(2 * f.dof(), 0)};
            w.walk(0, 0, cf * cg);
        }
    return out;
}

/// Truncated star product Σ_{r≤R} ℏ^r P^r(f,g).
inline PolySymbol star_product(const PolySymbol& f, const PolySymbol& g, double hbar, int R) {
    const auto terms = star_terms(f, g, R);
    PolySymbol out(f.dof());
    double h = 1.0;
    for (const auto& t : terms) {
        out += t * h;
        h *= hbar;
    }
    return out;
}

/// Exact star product (the series terminates for polynomials).
inline PolySymbol star_product(const PolySymbol& f, const PolySymbol& g, double hbar) {
    return star_product(f, g, hbar, f.total_degree() + g.total_degree());
}

/// Coefficients M^r of {f,g}_mb = Σ ℏ^{r−1} M^r; only odd r are nonzero.
inline std::vector<PolySymbol> moyal_terms(const PolySymbol& f, const PolySymbol& g, int R) {
    const auto fg = star_terms(f, g, R);
    const auto gf = star_terms(g, f, R);
    std::vector<PolySymbol> out(fg.size(), PolySymbol(f.dof()));
    for (std::size_t r = 1; r < fg.size(); r += 2) out[r] = (fg[r] - gf[r]) * cplx(0.0, -1.0);
    return out;
}

/// (f⋆g − g⋆f)/(iℏ) truncated at order R.
inline PolySymbol moyal_bracket(const PolySymbol& f, const PolySymbol& g, double hbar, int R) {
    if (!(hbar > 0.0)) throw std::invalid_argument("moyal_bracket: hbar must be positive");
    const auto terms = moyal_terms(f, g, R);
    PolySymbol out(f.dof());
    for (std::size_t r = 1; r < terms.size(); r += 2) out += terms[r] * std::pow(hbar, static_cast<double>(r) - 1.0);
    return out;
}

inline PolySymbol moyal_bracket(const PolySymbol& f, const PolySymbol& g, double hbar) {
    return moyal_bracket(f, g, hbar, f.total_degree() + g.total_degree());
}

inline PolySymbol poisson_bracket(const PolySymbol& f, const PolySymbol& g) {
    if (f.dof() != g.dof()) throw std::invalid_argument("poisson_bracket: degree-of-freedom mismatch");
    PolySymbol out(f.dof());
    const std::size_t n = f.dof();
    for (std::size_t i = 0; i < n; ++i) {
        out += f.derivative(i) * g.derivative(n + i);
        out -= f.derivative(n + i) * g.derivative(i);
    }
    return out;
}

/// ψ(x) = P(x)·exp(−a x² + b x), closed under x̂ and d/dx.
struct GaussianPoly {
    std::vector<cplx> coeffs{1.0};
    cplx a = 0.5;
    cplx b = 0.0;

    cplx operator()(double x) const {
        cplx poly = 0.0;
        for (std::size_t k = coeffs.size(); k-- > 0;) poly = poly * x + coeffs[k];
        return poly * std::exp(-a * x * x + b * x);
    }

    GaussianPoly times_x() const {
        GaussianPoly out = *this;
        out.coeffs.insert(out.coeffs.begin(), cplx(0.0));
        return out;
    }

    GaussianPoly derivative() const {
        GaussianPoly out = *this;
        out.coeffs.assign(coeffs.size() + 1, cplx(0.0));
        for (std::size_t k = 1; k < coeffs.size(); ++k) out.coeffs[k - 1] += static_cast<double>(k) * coeffs[k];
        for (std::size_t k = 0; k < coeffs.size(); ++k) {
            out.coeffs[k + 1] += -2.0 * a * coeffs[k];
            out.coeffs[k] += b * coeffs[k];
        }
        return out;
    }

    GaussianPoly scaled(cplx s) const {
        GaussianPoly out = *this;
        for (auto& c : out.coeffs) c *= s;
        return out;
    }

    GaussianPoly operator+(const GaussianPoly& o) const {
        if (o.a != a || o.b != b) throw std::invalid_argument("GaussianPoly: envelopes differ");
        GaussianPoly out = *this;
        out.coeffs.resize(std::max(coeffs.size(), o.coeffs.size()), cplx(0.0));
        for (std::size_t k = 0; k < o.coeffs.size(); ++k) out.coeffs[k] += o.coeffs[k];
        return out;
    }
};

/// Weyl-ordered operator of a one-degree-of-freedom polynomial symbol:
/// q^m p^n ↦ 2^{−m} Σ_k C(m,k) x̂^k p̂^n x̂^{m−k}.
class WeylOperator {
public:
    WeylOperator(PolySymbol symbol, double hbar) : symbol_(std::move(symbol)), hbar_(hbar) {
        if (symbol_.dof() != 1) throw std::invalid_argument("WeylOperator: only one degree of freedom is supported");
        if (!(hbar_ > 0.0)) throw std::invalid_argument("WeylOperator: hbar must be positive");
    }

    const PolySymbol& symbol() const { return symbol_; }
    double hbar() const { return hbar_; }

    GaussianPoly apply(const GaussianPoly& psi) const {
        GaussianPoly out = psi;
        out.coeffs.assign(1, cplx(0.0));
        for (const auto& [e, c] : symbol_.terms()) {
            const int m = e[0], n = e[1];
            for (int k = 0; k <= m; ++k) {
                GaussianPoly t = psi;
                for (int j = 0; j < m - k; ++j) t = t.times_x();
                for (int j = 0; j < n; ++j) t = t.derivative().scaled(cplx(0.0, -hbar_));
                for (int j = 0; j < k; ++j) t = t.times_x();
                out = out + t.scaled(c * detail::binomial(m, k) * std::pow(0.5, m));
            }
        }
        return out;
    }

private:
    PolySymbol symbol_;
    double hbar_;
};

inline WeylOperator weyl_quantize(const PolySymbol& f, double hbar) { return WeylOperator(f, hbar); }

}  // namespace sidlab
