#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace sidlab {

using cplx = std::complex<double>;

enum class QuadratureRule {
    trapezoid,       ///< composite trapezoid, endpoints included
    gauss_legendre,  ///< Gauss-Legendre nodes mapped to the support
    periodic,        ///< equispaced, right endpoint excluded, weights L/n
    lattice,         ///< caller-supplied nodes and weights (index grids, level sets)
};

inline const char* rule_name(QuadratureRule r) {
    switch (r) {
        case QuadratureRule::trapezoid: return "trapezoid";
        case QuadratureRule::gauss_legendre: return "gauss_legendre";
        case QuadratureRule::periodic: return "periodic";
        case QuadratureRule::lattice: return "lattice";
    }
    return "unknown";
}

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    double length() const { return hi - lo; }
};

/// One discretized spectral axis: nodes, quadrature weights and a label.
class SpectralGrid {
public:
    SpectralGrid() = default;

    SpectralGrid(Interval support, std::vector<double> nodes, std::vector<double> weights,
                 std::string label, QuadratureRule rule)
        : support_(support), nodes_(std::move(nodes)), weights_(std::move(weights)),
          label_(std::move(label)), rule_(rule) {
        if (nodes_.empty() || nodes_.size() != weights_.size())
            throw std::invalid_argument("SpectralGrid: nodes and weights must be non-empty and of equal length");
        for (std::size_t i = 0; i < nodes_.size(); ++i) {
            if (!(weights_[i] > 0.0)) throw std::invalid_argument("SpectralGrid: weights must be positive");
            if (i > 0 && !(nodes_[i] > nodes_[i - 1]))
                throw std::invalid_argument("SpectralGrid: nodes must be strictly increasing");
        }
        const double slack = 1e-12 * std::max(1.0, std::abs(support_.hi) + std::abs(support_.lo));
        if (nodes_.front() < support_.lo - slack || nodes_.back() > support_.hi + slack)
            throw std::invalid_argument("SpectralGrid: nodes must lie inside the support");
    }

    const Interval& support() const { return support_; }
    const std::vector<double>& nodes() const { return nodes_; }
    const std::vector<double>& weights() const { return weights_; }
    const std::string& label() const { return label_; }
    QuadratureRule rule() const { return rule_; }
    std::size_t size() const { return nodes_.size(); }
    double node(std::size_t i) const { return nodes_[i]; }
    double weight(std::size_t i) const { return weights_[i]; }
    double front() const { return nodes_.front(); }
    double back() const { return nodes_.back(); }

    double weight_sum() const {
        double s = 0.0;
        for (double w : weights_) s += w;
        return s;
    }

    /// Node spacing when the nodes are equispaced; 0 for a single node.
    double spacing() const {
        if (nodes_.size() < 2) return 0.0;
        return (nodes_.back() - nodes_.front()) / static_cast<double>(nodes_.size() - 1);
    }

    bool uniform(double rel_tol = 1e-9) const {
        if (nodes_.size() < 3) return true;
        const double h = spacing();
        for (std::size_t i = 1; i < nodes_.size(); ++i)
            if (std::abs(nodes_[i] - nodes_[i - 1] - h) > rel_tol * std::abs(h)) return false;
        return true;
    }

    /// Same node count, nodes and weights within tol.
    bool compatible(const SpectralGrid& other, double tol = 1e-12) const {
        if (size() != other.size()) return false;
        for (std::size_t i = 0; i < size(); ++i) {
            const double scale = std::max(1.0, std::abs(nodes_[i]));
            if (std::abs(nodes_[i] - other.nodes_[i]) > tol * scale) return false;
            if (std::abs(weights_[i] - other.weights_[i]) > tol * std::max(1.0, weights_[i])) return false;
        }
        return true;
    }

    /// Index of the node closest to x.
    std::size_t nearest(double x) const {
        auto it = std::lower_bound(nodes_.begin(), nodes_.end(), x);
        if (it == nodes_.begin()) return 0;
        if (it == nodes_.end()) return nodes_.size() - 1;
        const std::size_t i = static_cast<std::size_t>(it - nodes_.begin());
        return (x - nodes_[i - 1] <= nodes_[i] - x) ? i - 1 : i;
    }

private:
    Interval support_{};
    std::vector<double> nodes_;
    std::vector<double> weights_;
    std::string label_;
    QuadratureRule rule_ = QuadratureRule::trapezoid;
};

namespace detail {

inline void gauss_legendre_unit(std::size_t n, std::vector<double>& x, std::vector<double>& w) {
    x.assign(n, 0.0);
    w.assign(n, 0.0);
    const double pi = std::numbers::pi;
    for (std::size_t i = 0; i < (n + 1) / 2; ++i) {
        double z = std::cos(pi * (static_cast<double>(i) + 0.75) / (static_cast<double>(n) + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = 0.0;
            for (std::size_t k = 1; k <= n; ++k) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / static_cast<double>(k);
            }
            dp = static_cast<double>(n) * (z * p0 - p1) / (z * z - 1.0);
            const double dz = p0 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = w[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
}

}  // namespace detail

/// Build a grid on `support` with n nodes using the given rule.
inline SpectralGrid make_grid(Interval support, std::size_t n,
                              QuadratureRule rule = QuadratureRule::trapezoid,
                              std::string label = "omega") {
    if (n < 2) throw std::invalid_argument("make_grid: need at least 2 nodes");
    if (!(support.hi > support.lo) || !std::isfinite(support.lo) || !std::isfinite(support.hi))
        throw std::invalid_argument("make_grid: degenerate support interval");
    const double L = support.length();
    std::vector<double> nodes(n), weights(n);
    switch (rule) {
        case QuadratureRule::trapezoid: {
            const double h = L / static_cast<double>(n - 1);
            for (std::size_t i = 0; i < n; ++i) {
                nodes[i] = support.lo + h * static_cast<double>(i);
                weights[i] = h;
            }
            nodes[n - 1] = support.hi;
            weights[0] = weights[n - 1] = 0.5 * h;
            break;
        }
        case QuadratureRule::periodic: {
            const double h = L / static_cast<double>(n);
            for (std::size_t i = 0; i < n; ++i) {
                nodes[i] = support.lo + h * static_cast<double>(i);
                weights[i] = h;
            }
            break;
        }
        case QuadratureRule::gauss_legendre: {
            std::vector<double> x, w;
            detail::gauss_legendre_unit(n, x, w);
            for (std::size_t i = 0; i < n; ++i) {
                nodes[i] = support.lo + 0.5 * L * (x[i] + 1.0);
                weights[i] = 0.5 * L * w[i];
            }
            break;
        }
        case QuadratureRule::lattice:
            throw std::invalid_argument("make_grid: lattice grids are built with lattice_grid()");
    }
    return SpectralGrid(support, std::move(nodes), std::move(weights), std::move(label), rule);
}

/// Index grid 0..n-1 with unit weights (used for eigen-index axes and the trivial o-axis).
inline SpectralGrid index_grid(std::size_t n, std::string label = "p") {
    if (n < 1) throw std::invalid_argument("index_grid: need at least one node");
    std::vector<double> nodes(n), weights(n, 1.0);
    for (std::size_t i = 0; i < n; ++i) nodes[i] = static_cast<double>(i);
    return SpectralGrid({0.0, static_cast<double>(n - 1)}, std::move(nodes), std::move(weights),
                        std::move(label), QuadratureRule::lattice);
}

/// Arbitrary increasing nodes with explicit weights.
inline SpectralGrid lattice_grid(std::vector<double> nodes, std::vector<double> weights,
                                 std::string label) {
    if (nodes.empty()) throw std::invalid_argument("lattice_grid: empty node set");
    Interval support{nodes.front(), nodes.back()};
    return SpectralGrid(support, std::move(nodes), std::move(weights), std::move(label),
                        QuadratureRule::lattice);
}

inline cplx quad_integrate(std::span<const cplx> values, const SpectralGrid& grid) {
    if (values.size() != grid.size())
        throw std::invalid_argument("quad_integrate: values length does not match grid");
    cplx s = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) s += values[i] * grid.weight(i);
    return s;
}

inline double quad_integrate(std::span<const double> values, const SpectralGrid& grid) {
    if (values.size() != grid.size())
        throw std::invalid_argument("quad_integrate: values length does not match grid");
    double s = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) s += values[i] * grid.weight(i);
    return s;
}

template <class F>
auto quad_integrate(F&& f, const SpectralGrid& grid) -> decltype(f(0.0) * 1.0) {
    decltype(f(0.0) * 1.0) s{};
    for (std::size_t i = 0; i < grid.size(); ++i) s += f(grid.node(i)) * grid.weight(i);
    return s;
}

/// Mass of |density| beyond the grid support, estimated on [hi, hi + extent] with a fine trapezoid.
inline double truncation_mass(const std::function<double(double)>& density, const SpectralGrid& grid,
                              double extent, std::size_t samples = 4001) {
    if (!(extent > 0.0)) return 0.0;
    const SpectralGrid tail = make_grid({grid.support().hi, grid.support().hi + extent}, samples);
    return quad_integrate([&](double x) { return std::abs(density(x)); }, tail);
}

}  // namespace sidlab
