#pragma once

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <bit>
#include <complex>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "climit.hpp"
#include "diagonal.hpp"
#include "evolution.hpp"
#include "phase_space.hpp"

namespace sidlab {

/// File could not be opened, written, or parsed.
class IoError : public std::runtime_error {
public:
    IoError(const std::filesystem::path& path, const std::string& what)
        : std::runtime_error("'" + path.string() + "': " + what), path_(path) {}
    const std::filesystem::path& path() const noexcept { return path_; }

private:
    std::filesystem::path path_;
};

/// Array file: 4-byte magic, u32 rank, u64 dims, complex64 payload (float32 re, im), all little-endian.
struct BinaryArray {
    std::array<char, 4> magic{};
    std::vector<std::uint64_t> dims;
    std::vector<std::complex<float>> data;

    std::string magic_string() const { return std::string(magic.data(), 4); }
};

namespace detail {

template <class T>
void put_le(std::ostream& os, T v) {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
    os.write(reinterpret_cast<const char*>(b), sizeof(T));
}

template <class T>
T get_le(std::istream& is) {
    unsigned char b[sizeof(T)];
    if (!is.read(reinterpret_cast<char*>(b), sizeof(T))) throw std::runtime_error("truncated file");
    if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
    T v;
    std::memcpy(&v, b, sizeof(T));
    return v;
}

inline std::ofstream open_out(const std::filesystem::path& path, bool binary) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
        if (ec) throw IoError(path.parent_path(), "cannot create directory: " + ec.message());
    }
    std::ofstream os(path, binary ? std::ios::binary : std::ios::out);
    if (!os) throw IoError(path, "cannot open for writing");
    return os;
}

inline void close_checked(std::ofstream& os, const std::filesystem::path& path) {
    os.close();
    if (!os) throw IoError(path, "write failed");
}

/// Shortest round-tripping decimal form of a double.
inline std::string num(double x) {
    std::ostringstream ss;
    ss << std::setprecision(17) << x;
    return ss.str();
}

}  // namespace detail

inline void write_binary(const std::filesystem::path& path, const std::string& magic, const std::vector<std::uint64_t>& dims,
                         const std::vector<cplx>& values) {
    if (magic.size() != 4) throw std::invalid_argument("write_binary: magic must have four bytes");
    std::uint64_t n = 1;
    for (auto d : dims) n *= d;
    if (n != values.size()) throw std::invalid_argument("write_binary: dims do not match the payload size");
    auto os = detail::open_out(path, true);
    os.write(magic.data(), 4);
    detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(dims.size()));
    for (auto d : dims) detail::put_le<std::uint64_t>(os, d);
    for (const auto& v : values) {
        detail::put_le<float>(os, static_cast<float>(v.real()));
        detail::put_le<float>(os, static_cast<float>(v.imag()));
    }
    detail::close_checked(os, path);
}

inline BinaryArray read_binary(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError(path, "cannot open for reading");
    BinaryArray a;
    try {
        if (!is.read(a.magic.data(), 4)) throw std::runtime_error("truncated file");
        const auto rank = detail::get_le<std::uint32_t>(is);
        std::uint64_t n = 1;
        for (std::uint32_t k = 0; k < rank; ++k) {
            a.dims.push_back(detail::get_le<std::uint64_t>(is));
            n *= a.dims.back();
        }
        a.data.resize(n);
        for (auto& v : a.data) {
            const float re = detail::get_le<float>(is);
            const float im = detail::get_le<float>(is);
            v = {re, im};
        }
    } catch (const std::runtime_error& e) {
        throw IoError(path, e.what());
    }
    return a;
}

inline void write_binary(const std::filesystem::path& path, const PhaseSpaceFunction& f) {
    std::vector<std::uint64_t> dims;
    for (std::size_t k = 0; k < f.chart.axes(); ++k) dims.push_back(f.chart.axis(k).size());
    write_binary(path, "PSF1", dims, f.values);
}

inline void write_binary(const std::filesystem::path& path, const DiagonalState& d) {
    std::vector<cplx> v(d.values.begin(), d.values.end());
    write_binary(path, "DIA1", {d.omega.size(), d.p.size()}, v);
}

inline void write_binary(const std::filesystem::path& path, const PointerMap& U) {
    write_binary(path, "PTR1", {U.omega.size(), U.p.size(), U.o.size()}, U.U.data());
}

inline void write_binary(const std::filesystem::path& path, const ClassicalDistribution& rc) {
    std::vector<std::uint64_t> dims;
    for (std::size_t k = 0; k < rc.chart.axes(); ++k) dims.push_back(rc.chart.axis(k).size());
    write_binary(path, "PSF1", dims, std::vector<cplx>(rc.values.begin(), rc.values.end()));
}

// ---------------------------------------------------------------------------
// CSV.

inline void write_csv(const std::filesystem::path& path, const DiagonalState& d) {
    auto os = detail::open_out(path, false);
    os << "omega,p,rho\n";
    for (std::size_t w = 0; w < d.omega.size(); ++w)
        for (std::size_t p = 0; p < d.p.size(); ++p)
            os << detail::num(d.omega.node(w)) << ',' << detail::num(d.label(w, p)) << ',' << detail::num(d.at(w, p)) << '\n';
    detail::close_checked(os, path);
}

inline void write_csv(const std::filesystem::path& path, const std::vector<TracePoint>& trace) {
    auto os = detail::open_out(path, false);
    os << "t,re,im,modulus\n";
    for (const auto& p : trace)
        os << detail::num(p.t) << ',' << detail::num(p.value.real()) << ',' << detail::num(p.value.imag()) << ','
           << detail::num(p.modulus) << '\n';
    detail::close_checked(os, path);
}

inline void write_csv(const std::filesystem::path& path, const Trajectory& tr) {
    auto os = detail::open_out(path, false);
    const std::size_t n = tr.phi0.size() / 2;
    os << 't';
    for (std::size_t i = 0; i < n; ++i) os << ",q" << (n > 1 ? std::to_string(i + 1) : "");
    for (std::size_t i = 0; i < n; ++i) os << ",p" << (n > 1 ? std::to_string(i + 1) : "");
    os << '\n';
    for (std::size_t s = 0; s < tr.points.size(); ++s) {
        os << detail::num(tr.times[s]);
        for (double x : tr.points[s]) os << ',' << detail::num(x);
        os << '\n';
    }
    detail::close_checked(os, path);
}

namespace detail {

inline void write_chart_csv(const std::filesystem::path& path, const PhaseSpaceChart& chart,
                            const std::function<cplx(std::size_t)>& value, bool complex) {
    auto os = open_out(path, false);
    const std::size_t n = chart.dof();
    for (std::size_t i = 0; i < n; ++i) os << (i ? "," : "") << 'q' << (n > 1 ? std::to_string(i + 1) : "");
    for (std::size_t i = 0; i < n; ++i) os << ",p" << (n > 1 ? std::to_string(i + 1) : "");
    os << (complex ? ",re,im\n" : ",value\n");
    std::vector<double> phi;
    for (std::size_t i = 0; i < chart.size(); ++i) {
        chart.point(i, phi);
        for (std::size_t k = 0; k < phi.size(); ++k) os << (k ? "," : "") << num(phi[k]);
        const cplx v = value(i);
        os << ',' << num(v.real());
        if (complex) os << ',' << num(v.imag());
        os << '\n';
    }
    close_checked(os, path);
}

}  // namespace detail

/// Header "q,p,value" for real symbols; complex symbols get "q,p,re,im".
inline void write_csv(const std::filesystem::path& path, const PhaseSpaceFunction& f) {
    const bool complex = max_abs_imag(f) > 1e-12 * std::max(1.0, max_abs(f));
    detail::write_chart_csv(path, f.chart, [&](std::size_t i) { return f.values[i]; }, complex);
}

inline void write_csv(const std::filesystem::path& path, const ClassicalDistribution& rc) {
    detail::write_chart_csv(path, rc.chart, [&](std::size_t i) { return cplx(rc.values[i]); }, false);
}

// ---------------------------------------------------------------------------
// JSON.

inline nlohmann::json complex_json(cplx z) { return {{"re", z.real()}, {"im", z.imag()}}; }

inline nlohmann::json optional_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

/// Non-finite numbers become strings so documents stay valid JSON.
inline nlohmann::json number_json(double v) {
    if (std::isfinite(v)) return v;
    return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
    auto os = detail::open_out(path, false);
    os << j.dump(2) << '\n';
    detail::close_checked(os, path);
}

inline nlohmann::json read_json(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw IoError(path, "cannot open for reading");
    try {
        return nlohmann::json::parse(is);
    } catch (const nlohmann::json::exception& e) {
        throw IoError(path, e.what());
    }
}

}  // namespace sidlab
