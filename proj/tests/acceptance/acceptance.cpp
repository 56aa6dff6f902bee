#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <random>
#include <sstream>
#include <string>

#include "sidlab/pipeline.hpp"
#include "support.hpp"

using namespace sidlab;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

class Detail {
public:
    template <class T>
    Detail& operator()(const std::string& key, const T& v) {
        os_ << (first_ ? "" : ", ") << key << "=" << v;
        first_ = false;
        return *this;
    }
    std::string str() const { return os_.str(); }

private:
    std::ostringstream os_;
    bool first_ = true;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string join(const std::vector<double>& v) {
    std::ostringstream os;
    os.precision(4);
    os << "[";
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? " " : "") << v[i];
    os << "]";
    return os.str();
}

RunConfig shipped(const std::string& name) { return load_config(fs::path(SIDLAB_CONFIG_DIR) / (name + ".cfg")); }

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("sidlab_acceptance_" + name);
    fs::remove_all(p);
    return p;
}

nlohmann::json run_stage(const std::string& config, const std::string& stage) {
    PipelineOptions opt;
    opt.out_dir = scratch(config + "_" + stage);
    opt.stage = stage;
    return run_pipeline(shipped(config), opt).report["stages"][stage];
}

Outcome decoherence() {
    const auto t0 = std::chrono::steady_clock::now();
    const sidlab::testing::DecaySetup d;
    const auto rho = d.state();
    const auto A = d.observable();
    const auto ts = pre_revival_times(d.omega(), d.hbar, 64);
    const auto rep = decoherence_time(rho, A, {d.hbar, ts}, 0.01);
    const double f0 = sidlab::testing::gaussian_decay_oracle(0.0, d.b, d.s, d.hbar);
    double worst = 0.0;
    for (const auto& p : rep.fluct_trace) {
        const double o = sidlab::testing::gaussian_decay_oracle(p.t, d.b, d.s, d.hbar);
        worst = std::max(worst, std::abs(p.modulus - o) / (o + 1e-10 * f0));
    }
    const double end = std::abs(mean_value(rho, A, ts.back(), d.hbar) - pair(decohered_state(rho), A));
    const double secs = seconds_since(t0);
    return {worst < 0.01 && end < 1e-6 && secs < 5.0,
            Detail()("max_rel_oracle_error", worst)("end_residual", end)("runtime_s", secs).str()};
}

Outcome singular_invariance() {
    const SpectralGrid omega = make_grid({0.0, 5.0}, 11);
    const SpectralGrid o = index_grid(2, "o");
    std::mt19937_64 rng(1001);
    const auto rho = sidlab::testing::random_state(omega, o, rng);
    const auto AS = split(sidlab::testing::random_observable(omega, o, rng)).first;
    const cplx v0 = pair(rho, AS);
    double inv = 0.0;
    for (int k = 1; k <= 50; ++k) inv = std::max(inv, std::abs(pair(evolve_state(rho, 0.37 * k, 0.8), AS) - v0));
    std::uniform_real_distribution<double> T(0.0, 20.0);
    double dual = 0.0;
    for (int k = 0; k < 100; ++k) {
        const auto r = sidlab::testing::random_state(omega, o, rng);
        const auto A = sidlab::testing::random_observable(omega, o, rng);
        const double t = T(rng);
        dual = std::max(dual, std::abs(pair(evolve_state(r, t, 0.8), A) - pair(r, evolve_observable(A, t, 0.8))));
    }
    return {inv < 1e-12 && dual < 1e-12, Detail()("singular_drift", inv)("duality_residual", dual).str()};
}

Outcome pointer_basis() {
    const SpectralGrid omega = make_grid({0.0, 3.0}, 9);
    const SpectralGrid o = make_grid({-1.0, 1.0}, 5, QuadratureRule::gauss_legendre, "o");
    double unit = 0.0, off = 0.0, recon = 0.0;
    for (std::uint64_t seed = 2001; seed < 2021; ++seed) {
        std::mt19937_64 rng(seed);
        const auto rho = decohered_state(normalize(sidlab::testing::random_state(omega, o, rng)));
        const auto [U, D] = find_pointer_basis(rho);
        unit = std::max(unit, unitarity_residual(U));
        off = std::max(off, offdiagonal_mass(transform_state(rho, U)));
        const auto back = reconstruct_state(U, D);
        for (std::size_t i = 0; i < back.singular.data().size(); ++i)
            recon = std::max(recon, std::abs(back.singular.data()[i] - rho.singular.data()[i]));
    }
    return {unit < 1e-10 && off < 1e-10 && recon < 1e-10,
            Detail()("unitarity", unit)("offdiagonal_mass", off)("reconstruction", recon).str()};
}

Outcome wigner_weyl() {
    double l2 = 0.0, imag = 0.0;
    for (double h : {1.0, 0.25}) {
        const auto x = sidlab::testing::corpus_grid(h);
        const auto chart = matched_chart(x, h);
        for (const auto& g : sidlab::testing::gaussian_corpus()) {
            const auto f = sample(chart, [&](std::span<const double> z) { return g(z, h); }, h);
            l2 = std::max(l2, relative_l2_error(wigner_symbol(weyl_quantize(f, x), chart, h), f));
        }
    }
    std::mt19937_64 rng(4001);
    std::normal_distribution<double> N(0.0, 1.0);
    const auto x = make_grid({-3.0, 3.0}, 32, QuadratureRule::trapezoid, "x");
    for (int k = 0; k < 5; ++k) {
        Eigen::MatrixXcd B(32, 32);
        for (Eigen::Index i = 0; i < 32; ++i)
            for (Eigen::Index j = 0; j < 32; ++j) B(i, j) = cplx(N(rng), N(rng));
        const auto W = wigner_symbol(PositionKernel{x, B + B.adjoint(), {}}, matched_chart(x, 1.0), 1.0);
        imag = std::max(imag, max_abs_imag(W) / std::max(1.0, max_abs(W)));
    }
    return {l2 < 1e-6 && imag < 1e-12, Detail()("max_relative_l2", l2)("max_imag", imag).str()};
}

Outcome star_moyal() {
    const PolySymbol q = PolySymbol::q(), p = PolySymbol::p(), one = PolySymbol::constant(1.0);
    double ccr = 0.0;
    for (double h : {1.0, 0.3, 1e-3})
        ccr = std::max(ccr, (star_product(q, p, h) - star_product(p, q, h) - PolySymbol::constant(cplx(0.0, h))).norm());
    const std::vector<PolySymbol> quad = {one, q, p, q * q, q * p, p * p, q * q * 3.0 + q * p - p};
    double mp = 0.0;
    for (const auto& f : quad)
        for (const auto& g : quad) mp = std::max(mp, (moyal_bracket(f, g, 0.8) - poisson_bracket(f, g)).norm());
    // {q³,p³}: order 1 is 9q²p², order 3 is −3/2; {q³,qp³}: 9q³p² and −3q/2.
    const PolySymbol q3 = q * q * q, p3 = p * p * p;
    const auto t1 = moyal_terms(q3, p3, 6), t2 = moyal_terms(q3, q * p3, 6);
    double d3 = std::max({(t1[1] - q * q * p * p * 9.0).norm(), (t1[3] - PolySymbol::constant(-1.5)).norm(),
                          (t2[1] - q3 * p * p * 9.0).norm(), (t2[3] - q * -1.5).norm()});
    for (std::size_t r : {0u, 2u, 4u, 5u, 6u}) d3 = std::max({d3, t1[r].norm(), t2[r].norm()});
    return {ccr == 0.0 && mp == 0.0 && d3 < 1e-14, Detail()("ccr_residual", ccr)("moyal_minus_poisson", mp)("degree3_term_error", d3).str()};
}

Outcome commuting_scaling() {
    const auto t0 = std::chrono::steady_clock::now();
    const double E = 9.0;
    const auto chart = make_chart(make_grid({-E, E}, 64, QuadratureRule::periodic, "q"), make_grid({-E, E}, 64, QuadratureRule::periodic, "p"));
    auto H = [](std::span<const double> z) { return 0.5 * (z[0] * z[0] + z[1] * z[1]); };
    auto f = [&](std::span<const double> z) { return cplx(std::exp(-H(z))); };
    auto g = [&](std::span<const double> z) { return cplx(H(z) * std::exp(-0.5 * H(z))); };
    const std::vector<double> hs = {1.0, 0.5, 0.25, 0.125, 0.0625};
    const auto grid = commuting_product_check(f, g, chart, hs);
    const PolySymbol Hp = (PolySymbol::q() * PolySymbol::q() + PolySymbol::p() * PolySymbol::p()) * 0.5;
    const auto poly = commuting_product_check(Hp, Hp * Hp, hs);
    const double secs = seconds_since(t0);
    const bool ok = grid.exponent && poly.exponent && std::abs(*grid.exponent - 2.0) <= 0.2 &&
                    std::abs(*poly.exponent - 2.0) <= 0.2 && secs < 30.0;
    return {ok, Detail()("grid_exponent", grid.exponent.value_or(NAN))("polynomial_exponent", poly.exponent.value_or(NAN))(
                    "deviations", join(grid.deviations))("runtime_s", secs)
                    .str()};
}

Outcome sharpening() {
    const auto m = free_translation_model();
    const std::vector<double> hs = {1.0, 0.5, 0.25, 0.125, 0.0625};
    const auto rep = eigen_symbol_limit(m, 2.0 * 2.0 * std::numbers::pi / m.box_length, hs);
    bool mono = true;
    for (std::size_t i = 1; i < rep.mass_fraction.size(); ++i)
        if (rep.mass_fraction[i] < rep.mass_fraction[i - 1] - 0.02) mono = false;
    return {mono && rep.mass_fraction.back() > 0.99, Detail()("mass_fraction", join(rep.mass_fraction))("monotone_2pct", mono).str()};
}

Outcome invariant_volume_check() {
    const auto m = oscillator_model();
    const auto v = invariant_volume(m, 1.0, {}, 0.1, classical_chart(m, 4.0, 1.0, 64), 8);
    const double rel = std::abs(v.volume / (2.0 * std::numbers::pi) - 1.0);
    return {rel < 0.02, Detail()("C", v.volume)("reference", 2.0 * std::numbers::pi)("relative_error", rel).str()};
}

Outcome classical() {
    bool ok = true;
    Detail d;
    for (const std::string model : {"free_translation", "oscillator"}) {
        const auto s = run_stage(model, "classical");
        const auto& c = s["constancy"];
        const double mn = s["min_value"], integral = s["integral"], on = c["on_ridge_deviation"], off = c["transversal_deviation"];
        ok = ok && mn >= 0.0 && std::abs(integral - 1.0) < 1e-6 && on < 1e-3 && !c["transversal_pass"].get<bool>();
        d(model + ".min", mn)(model + ".integral", integral)(model + ".on_ridge", on)(model + ".transversal", off);
    }
    return {ok, d.str()};
}

Outcome route_equivalence() {
    bool ok = true;
    Detail d;
    for (const std::string model : {"free_translation", "oscillator"}) {
        const auto s = run_stage(model, "phase_space_route");
        const double route = s["route_residual"], limit = s["limit_residual"];
        ok = ok && route < 1e-6 && limit < 1e-8;
        d(model + ".route", route)(model + ".limit", limit);
    }
    return {ok, d.str()};
}

Outcome positivity() {
    const auto s = run_stage("oscillator", "positivity");
    double min_eig = INFINITY;
    std::vector<double> neg;
    for (const auto& l : s["per_hbar"]) {
        min_eig = std::min(min_eig, l["min_eigenvalue"].get<double>());
        neg.push_back(l["negative_mass_fraction"]);
    }
    bool decreasing = true;
    for (std::size_t i = 1; i < neg.size(); ++i)
        if (neg[i] > neg[i - 1] || (neg[i - 1] > 0.0 && !(neg[i] < neg[i - 1]))) decreasing = false;
    return {min_eig >= -1e-8 && decreasing && s["points"] == 8 && s["sets"] == 20,
            Detail()("min_eigenvalue", min_eig)("negative_mass_fraction", join(neg))("decreasing", decreasing).str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(is), {}};
}

Outcome determinism() {
    PipelineOptions a, b;
    a.out_dir = scratch("det_a");
    b.out_dir = scratch("det_b");
    const RunConfig cfg = shipped("free_translation");
    const RunReport ra = run_pipeline(cfg, a), rb = run_pipeline(cfg, b);
    bool same = ra.report.dump() == rb.report.dump() && ra.artifacts == rb.artifacts;
    std::size_t compared = 0;
    for (const auto& f : ra.artifacts) {
        if (slurp(a.out_dir / f) != slurp(b.out_dir / f)) same = false;
        ++compared;
    }
    return {same, Detail()("artifacts_compared", compared).str()};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"decoherence_decay", decoherence},
        {"singular_invariance_and_duality", singular_invariance},
        {"pointer_basis", pointer_basis},
        {"wigner_weyl_round_trip", wigner_weyl},
        {"star_moyal_identities", star_moyal},
        {"commuting_scaling", commuting_scaling},
        {"eigen_symbol_sharpening", sharpening},
        {"invariant_volume", invariant_volume_check},
        {"classical_distribution", classical},
        {"phase_space_route", route_equivalence},
        {"positivity", positivity},
        {"determinism", determinism},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome r;
        try {
            r = criteria[i].second();
        } catch (const std::exception& e) {
            r = {false, std::string("exception: ") + e.what()};
        }
        if (!r.pass) ++failures;
        std::printf("%-4s %2zu %-32s %s\n", r.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), r.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
