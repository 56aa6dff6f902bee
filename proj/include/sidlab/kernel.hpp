#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace sidlab {

using cplx = std::complex<double>;

/// Dense array K(ω, o, o′), o-indices fastest.
class Kernel3 {
public:
    Kernel3() = default;
    Kernel3(std::size_t n_omega, std::size_t n_o)
        : nw_(n_omega), no_(n_o), data_(n_omega * n_o * n_o, cplx(0.0)) {}

    std::size_t n_omega() const { return nw_; }
    std::size_t n_o() const { return no_; }
    cplx& operator()(std::size_t w, std::size_t a, std::size_t b) { return data_[(w * no_ + a) * no_ + b]; }
    const cplx& operator()(std::size_t w, std::size_t a, std::size_t b) const {
        return data_[(w * no_ + a) * no_ + b];
    }
    std::vector<cplx>& data() { return data_; }
    const std::vector<cplx>& data() const { return data_; }

    double max_abs() const {
        double m = 0.0;
        for (const auto& v : data_) m = std::max(m, std::abs(v));
        return m;
    }
    bool same_shape(const Kernel3& o) const { return nw_ == o.nw_ && no_ == o.no_; }

private:
    std::size_t nw_ = 0, no_ = 0;
    std::vector<cplx> data_;
};

/// Dense array K(ω, ω′, o, o′), o-indices fastest.
class Kernel4 {
public:
    Kernel4() = default;
    Kernel4(std::size_t n_omega, std::size_t n_o)
        : nw_(n_omega), no_(n_o), data_(n_omega * n_omega * n_o * n_o, cplx(0.0)) {}

    std::size_t n_omega() const { return nw_; }
    std::size_t n_o() const { return no_; }
    cplx& operator()(std::size_t w, std::size_t v, std::size_t a, std::size_t b) {
        return data_[((w * nw_ + v) * no_ + a) * no_ + b];
    }
    const cplx& operator()(std::size_t w, std::size_t v, std::size_t a, std::size_t b) const {
        return data_[((w * nw_ + v) * no_ + a) * no_ + b];
    }
    std::vector<cplx>& data() { return data_; }
    const std::vector<cplx>& data() const { return data_; }

    double max_abs() const {
        double m = 0.0;
        for (const auto& v : data_) m = std::max(m, std::abs(v));
        return m;
    }
    bool is_zero() const {
        return std::all_of(data_.begin(), data_.end(), [](const cplx& v) { return v == cplx(0.0); });
    }
    bool same_shape(const Kernel4& o) const { return nw_ == o.nw_ && no_ == o.no_; }

private:
    std::size_t nw_ = 0, no_ = 0;
    std::vector<cplx> data_;
};

template <class K>
K axpby(cplx a, const K& x, cplx b, const K& y) {
    if (!x.same_shape(y)) throw std::invalid_argument("kernel shapes differ");
    K out = x;
    for (std::size_t i = 0; i < out.data().size(); ++i) out.data()[i] = a * x.data()[i] + b * y.data()[i];
    return out;
}

}  // namespace sidlab
