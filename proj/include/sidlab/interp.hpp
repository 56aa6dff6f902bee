#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>

#include "spectral.hpp"

namespace sidlab {

/// Lagrange stencil of `N` consecutive nodes around x (nodes need not be uniform).
template <std::size_t N>
struct Stencil {
    std::size_t start = 0;
    std::size_t count = 0;
    std::array<double, N> w{};
};

template <std::size_t N>
Stencil<N> lagrange_stencil(const SpectralGrid& g, double x) {
    Stencil<N> s;
    const std::size_t n = g.size();
    s.count = std::min(N, n);
    if (n == 1) {
        s.w[0] = 1.0;
        return s;
    }
    auto it = std::upper_bound(g.nodes().begin(), g.nodes().end(), x);
    const std::ptrdiff_t right = it - g.nodes().begin();
    std::ptrdiff_t start = right - static_cast<std::ptrdiff_t>(s.count / 2);
    start = std::clamp<std::ptrdiff_t>(start, 0, static_cast<std::ptrdiff_t>(n - s.count));
    s.start = static_cast<std::size_t>(start);
    for (std::size_t i = 0; i < s.count; ++i) {
        const double xi = g.node(s.start + i);
        if (x == xi) {
            s.w.fill(0.0);
            s.w[i] = 1.0;
            return s;
        }
        double l = 1.0;
        for (std::size_t j = 0; j < s.count; ++j)
            if (j != i) l *= (x - g.node(s.start + j)) / (xi - g.node(s.start + j));
        s.w[i] = l;
    }
    return s;
}

}  // namespace sidlab
