#pragma once

#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "algebra.hpp"
#include "climit.hpp"
#include "config.hpp"
#include "diagonal.hpp"
#include "evolution.hpp"
#include "io.hpp"
#include "models.hpp"
#include "phase_space.hpp"
#include "poly_symbol.hpp"

namespace sidlab {

inline const std::vector<std::string>& stage_names() {
    static const std::vector<std::string> names = {"state",    "evolution",  "decoherence", "diagonal",   "phase_space",
                                                   "classical", "phase_space_route", "positivity",  "sharpening"};
    return names;
}

inline const std::vector<std::string>& stage_prerequisites(const std::string& stage) {
    static const std::map<std::string, std::vector<std::string>> deps = {
        {"state", {}},
        {"evolution", {"state"}},
        {"decoherence", {"state"}},
        {"diagonal", {"state"}},
        {"phase_space", {"state", "diagonal"}},
        {"classical", {"state", "diagonal", "phase_space"}},
        {"phase_space_route", {"state"}},
        {"positivity", {"state"}},
        {"sharpening", {}},
    };
    auto it = deps.find(stage);
    if (it == deps.end()) throw ConfigError("unknown stage '" + stage + "'");
    return it->second;
}

// ---------------------------------------------------------------------------
// Analytic kernels selected by expression id.

inline double gauss(double x, double c, double w) { return std::exp(-(x - c) * (x - c) / (2.0 * w * w)); }

/// ρ(ω) profile of the singular state expression.
inline std::function<double(double)> singular_profile(const RunConfig& cfg) {
    const std::string id = cfg.str("state.singular");
    const double c = cfg.num("state.singular.center"), w = cfg.num("state.singular.width");
    if (id == "gaussian") return [=](double x) { return gauss(x, c, w); };
    if (id == "two_gaussian") {
        const double c2 = cfg.num("state.singular.center2"), r = cfg.num("state.singular.ratio");
        return [=](double x) { return gauss(x, c, w) + r * gauss(x, c2, w); };
    }
    return [](double) { return 0.0; };
}

inline StateFunctional build_state(const RunConfig& cfg, const ModelSpec& m, double hbar) {
    const SpectralGrid omega = level_grid(m, hbar), o = label_grid(m, hbar);
    StateFunctional rho = zero_state(omega, o);
    const auto g = singular_profile(cfg);
    const double decay = cfg.num("state.label_decay");
    for (std::size_t w = 0; w < omega.size(); ++w)
        for (std::size_t k = 0; k < o.size(); ++k)
            if (ket_exists(m, w, k))
                rho.singular(w, k, k) = g(omega.node(w)) * std::exp(-decay * static_cast<double>(k)) / o.weight(k);
    if (cfg.str("state.regular") == "gaussian_coherence") {
        const double A = cfg.num("state.regular.amplitude"), c = cfg.num("state.regular.center");
        const double b = cfg.num("state.regular.width"), s = cfg.num("state.regular.coherence");
        for (std::size_t w = 0; w < omega.size(); ++w)
            for (std::size_t v = 0; v < omega.size(); ++v) {
                const double x = omega.node(w), y = omega.node(v);
                const double val = A * gauss(x, c, b) * gauss(y, c, b) * std::exp(-(x - y) * (x - y) / (2.0 * s * s));
                for (std::size_t k = 0; k < o.size(); ++k)
                    if (ket_exists(m, w, k) && ket_exists(m, v, k)) rho.regular(w, v, k, k) = val / o.weight(k);
            }
    }
    return normalize(rho);
}

inline Observable build_observable(const RunConfig& cfg, const ModelSpec& m, double hbar) {
    const SpectralGrid omega = level_grid(m, hbar), o = label_grid(m, hbar);
    Observable A = zero_observable(omega, o);
    const std::string sid = cfg.str("observable.singular");
    if (sid == "one") {
        A = identity_observable(omega, o);
    } else {
        const double c = cfg.num("observable.singular.center"), wd = cfg.num("observable.singular.width");
        for (std::size_t w = 0; w < omega.size(); ++w)
            for (std::size_t k = 0; k < o.size(); ++k) {
                const double x = omega.node(w);
                A.singular(w, k, k) = (sid == "energy" ? x : gauss(x, c, wd)) / o.weight(k);
            }
        A.singular_delta = true;
    }
    const std::string rid = cfg.str("observable.regular");
    if (rid != "none") {
        const double amp = cfg.num("observable.regular.amplitude"), wd = cfg.num("observable.regular.width");
        for (std::size_t w = 0; w < omega.size(); ++w)
            for (std::size_t v = 0; v < omega.size(); ++v) {
                const double d = omega.node(w) - omega.node(v);
                const double val = rid == "constant" ? amp : amp * std::exp(-d * d / (2.0 * wd * wd));
                for (std::size_t k = 0; k < o.size(); ++k) A.regular(w, v, k, k) = val / o.weight(k);
            }
    }
    return A;
}

/// A phase-space point on the level set H = ω, P = p of a reference model.
inline std::vector<double> point_on_level(const ModelSpec& m, double omega, const std::vector<double>& p) {
    switch (m.kind) {
        case ModelKind::free_translation: return {0.25 * m.box_length, omega};
        case ModelKind::oscillator: return {std::sqrt(2.0 * omega), 0.0};
        case ModelKind::two_oscillator:
            return {std::sqrt(2.0 * std::max(0.0, omega - p.at(0))), std::sqrt(2.0 * std::max(0.0, p.at(0))), 0.0, 0.0};
    }
    return {};
}

// ---------------------------------------------------------------------------
// Pipeline.

enum class OutputFormat { csv, json, binary };

inline OutputFormat parse_format(const std::string& s) {
    if (s == "csv") return OutputFormat::csv;
    if (s == "json") return OutputFormat::json;
    if (s == "binary") return OutputFormat::binary;
    throw ConfigError("unknown format '" + s + "' (csv | json | binary)");
}

struct PipelineOptions {
    std::filesystem::path out_dir;
    std::optional<std::string> stage;          ///< run this stage and its prerequisites only
    std::set<OutputFormat> formats{OutputFormat::csv, OutputFormat::json, OutputFormat::binary};
};

struct RunReport {
    nlohmann::json report;  ///< config echo, seed, per-stage diagnostics
    nlohmann::json timing;  ///< wall-clock seconds per stage
    std::vector<std::string> artifacts;

    /// Contents of report.json; timing is kept out so equal seeds give equal bytes.
    nlohmann::json document() const {
        nlohmann::json j = report;
        j["artifacts"] = artifacts;
        return j;
    }
};

class Pipeline {
public:
    Pipeline(RunConfig cfg, PipelineOptions opt) : cfg_(std::move(cfg)), opt_(std::move(opt)) {
        cfg_.validate();
        model_ = cfg_.model();
        hbar_ = cfg_.hbar();
    }

    RunReport run() {
        std::vector<std::string> todo;
        if (opt_.stage) {
            for (const auto& d : stage_prerequisites(*opt_.stage)) todo.push_back(d);
            todo.push_back(*opt_.stage);
        } else {
            todo = stage_names();
        }
        rep_.report["config"] = cfg_.to_json();
        rep_.report["seed"] = cfg_.seed();
        rep_.report["model"] = model_.name();
        rep_.report["stages"] = nlohmann::json::object();
        for (const auto& s : todo) run_stage(s);
        if (wants(OutputFormat::json)) {
            rep_.artifacts.push_back("report.json");
            write_json(opt_.out_dir / "report.json", rep_.document());
            write_json(opt_.out_dir / "timing.json", rep_.timing);
        }
        return rep_;
    }

    const StateFunctional& state() const { return *rho_; }
    const Observable& observable() const { return *A_; }

private:
    bool wants(OutputFormat f) const { return opt_.formats.count(f) > 0; }

    std::filesystem::path artifact(const std::string& name) {
        rep_.artifacts.push_back(name);
        return opt_.out_dir / name;
    }

    void run_stage(const std::string& name) {
        const auto t0 = std::chrono::steady_clock::now();
        nlohmann::json& out = rep_.report["stages"][name];
        try {
            if (name == "state") stage_state(out);
            else if (name == "evolution") stage_evolution(out);
            else if (name == "decoherence") stage_decoherence(out);
            else if (name == "diagonal") stage_diagonal(out);
            else if (name == "phase_space") stage_phase_space(out);
            else if (name == "classical") stage_classical(out);
            else if (name == "phase_space_route") stage_phase_space_route(out);
            else if (name == "positivity") stage_positivity(out);
            else if (name == "sharpening") stage_sharpening(out);
            else throw ConfigError("unknown stage '" + name + "'");
            if (!out.contains("status")) out["status"] = "ok";
        } catch (const UnsupportedModelError& e) {
            out = {{"status", "unsupported"}, {"reason", e.what()}};
        } catch (const StageError&) {
            throw;
        } catch (const std::exception& e) {
            throw StageError(name, e.what());
        }
        rep_.timing[name] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }

    void stage_state(nlohmann::json& out) {
        rho_ = build_state(cfg_, model_, hbar_);
        A_ = build_observable(cfg_, model_, hbar_);
        const auto d = check_state(*rho_);
        out["levels"] = rho_->omega.size();
        out["labels"] = rho_->o.size();
        out["omega_range"] = {rho_->omega.front(), rho_->omega.back()};
        out["level_spacing"] = rho_->omega.weight(0);
        out["check_state"] = {{"hermiticity_residual", d.hermiticity_residual},
                              {"min_eigenvalue", d.min_eigenvalue},
                              {"normalization_residual", d.normalization_residual},
                              {"pass", d.hermitian() && d.positive() && d.normalized()}};
        const auto g = singular_profile(cfg_);
        out["truncation_mass"] = truncation_mass(g, rho_->omega, 10.0 * cfg_.num("state.singular.width"));
        out["observable_hermiticity_residual"] = hermiticity_residual(*A_);
        out["regular_part"] = rho_->regular.max_abs() > 0.0;
    }

    void stage_evolution(nlohmann::json& out) {
        times_ = pre_revival_times(rho_->omega, hbar_, cfg_.count("times.count"));
        const auto [AS, AR] = split(*A_);
        const cplx inv0 = pair_singular(*rho_, AS);
        double inv_res = 0.0, dual_res = 0.0;
        std::vector<TracePoint> trace;
        for (double t : times_) {
            const StateFunctional rt = evolve_state(*rho_, t, hbar_);
            inv_res = std::max(inv_res, std::abs(pair_singular(rt, AS) - inv0));
            const cplx heis = pair(*rho_, evolve_observable(*A_, t, hbar_));
            dual_res = std::max(dual_res, std::abs(heis - pair(rt, *A_)));
            trace.push_back({t, heis, std::abs(heis)});
        }
        out["times"] = {{"count", times_.size()}, {"first", times_.front()}, {"last", times_.back()}};
        out["singular_invariance_residual"] = inv_res;
        out["duality_residual"] = dual_res;
        out["mean_value_t0"] = complex_json(trace.front().value);
        if (wants(OutputFormat::csv)) write_csv(artifact("mean_value.csv"), trace);
    }

    void stage_decoherence(nlohmann::json& out) {
        if (times_.empty()) times_ = pre_revival_times(rho_->omega, hbar_, cfg_.count("times.count"));
        const auto rep = decoherence_time(*rho_, *A_, {hbar_, times_}, cfg_.num("epsilon"));
        const cplx limit = pair(decohered_state(*rho_), *A_);
        out["t_D"] = optional_json(rep.t_D);
        out["epsilon"] = rep.epsilon;
        out["E_char"] = optional_json(rep.E_char);
        out["E_spread"] = optional_json(rep.E_spread);
        out["heuristic_time"] = optional_json(rep.heuristic_time);
        out["revival_time"] = optional_json(rep.revival_time);
        out["window_end"] = optional_json(rep.window_end);
        out["samples_within_window"] = rep.samples_within_window;
        out["fluct_at_zero"] = complex_json(rep.fluct_at_zero);
        out["integrability_note"] = rep.integrability_note;
        out["weak_limit"] = complex_json(limit);
        out["window_end_residual"] = std::abs(mean_value(*rho_, *A_, times_.back(), hbar_) - limit);
        if (wants(OutputFormat::csv)) write_csv(artifact("decoherence_trace.csv"), rep.fluct_trace);
    }

    void stage_diagonal(nlohmann::json& out) {
        rho_star_ = decohered_state(*rho_);
        auto [U, D] = find_pointer_basis(*rho_star_);
        const StateFunctional tr = transform_state(*rho_star_, U);
        const StateFunctional back = reconstruct_state(U, D);
        double rec = 0.0;
        for (std::size_t i = 0; i < back.singular.data().size(); ++i)
            rec = std::max(rec, std::abs(back.singular.data()[i] - rho_star_->singular.data()[i]));
        out["unitarity_residual"] = unitarity_residual(U);
        out["offdiagonal_mass"] = offdiagonal_mass(tr);
        out["reconstruction_error"] = rec;
        out["total"] = D.total();
        out["min_value"] = *std::min_element(D.values.begin(), D.values.end());
        if (wants(OutputFormat::csv)) write_csv(artifact("diagonal_state.csv"), D);
        if (wants(OutputFormat::binary)) {
            write_binary(artifact("diagonal_state.bin"), D);
            write_binary(artifact("pointer_map.bin"), U);
        }
        U_ = std::move(U);
        diag_ = std::move(D);
    }

    void stage_phase_space(nlohmann::json& out) {
        W_S_ = state_symbol(*rho_star_, model_, hbar_);
        const PhaseSpaceFunction A_S = observable_symbol(*A_, model_, hbar_);
        const cplx ps = phase_space_pair(*W_S_, A_S);
        const cplx q = pair(*rho_star_, *A_);
        out["chart"] = W_S_->chart.note;
        out["chart_shape"] = nlohmann::json::array();
        for (std::size_t k = 0; k < W_S_->chart.axes(); ++k) out["chart_shape"].push_back(W_S_->chart.axis(k).size());
        out["duality_residual"] = std::abs(ps - q);
        out["symbol_integral"] = complex_json(integrate(*W_S_));
        out["symbol_max_imag"] = max_abs_imag(*W_S_);
        const auto mc = check_model(model_, W_S_->chart);
        out["model_check"] = {{"poisson_residual", mc.poisson_residual},
                              {"hbar_independent", mc.symbols_hbar_independent},
                              {"pass", mc.pass}};
        const auto sc = commuting_product_check(model_.H, model_.H, cfg_.hbar_sequence());
        out["commuting_product"] = {{"hbars", sc.hbars},
                                    {"deviations", sc.deviations},
                                    {"exponent", sc.exponent ? nlohmann::json(*sc.exponent) : nlohmann::json(nullptr)},
                                    {"pass", sc.pass}};
        if (wants(OutputFormat::binary)) write_binary(artifact("state_symbol.bin"), *W_S_);
        if (wants(OutputFormat::csv) && W_S_->chart.dof() == 1) write_csv(artifact("state_symbol.csv"), *W_S_);
    }

    void stage_classical(nlohmann::json& out) {
        const double sigma = cfg_.num("sigma");
        double wmax = 0.0;
        std::size_t best = 0;
        for (std::size_t i = 0; i < diag_->values.size(); ++i) {
            if (diag_->values[i] > 1e-14 * *std::max_element(diag_->values.begin(), diag_->values.end()))
                wmax = std::max(wmax, diag_->omega.node(i / diag_->p.size()));
            if (diag_->values[i] > diag_->values[best]) best = i;
        }
        const PhaseSpaceChart chart = classical_chart(model_, wmax, cfg_.num("classical.margin"), cfg_.count("classical.chart_points"));
        const ClassicalDistribution rc = classical_distribution(*diag_, model_, sigma, chart);
        out["sigma"] = sigma;
        out["min_value"] = rc.min_value;
        out["integral"] = rc.integral;
        out["ridges"] = rc.terms.size();
        out["volume_constant"] = rc.volume_constant;
        double cmin = INFINITY, cmax = 0.0;
        for (const auto& t : rc.terms) {
            cmin = std::min(cmin, t.volume);
            cmax = std::max(cmax, t.volume);
        }
        out["ridge_volume_range"] = {cmin, cmax};

        const double w0 = diag_->omega.node(best / diag_->p.size());
        std::vector<double> p0;
        if (!model_.P.empty()) p0 = {diag_->label(best / diag_->p.size(), best % diag_->p.size())};
        out["dominant_ridge"] = {{"omega", w0}, {"p", p0}};

        // On-ridge trajectory and a transversal negative control.
        const auto phi0 = point_on_level(model_, w0, p0);
        const double T = model_.kind == ModelKind::free_translation ? 0.5 * model_.box_length : 2.0 * std::numbers::pi;
        const Trajectory tr = hamiltonian_flow(model_, phi0, T, 20000);
        const auto on = constancy_check(rc, tr);
        const std::size_t nd = model_.dof();
        PolySymbol cross = model_.kind == ModelKind::free_translation ? PolySymbol::q(0, nd) : PolySymbol::p(0, nd);
        std::vector<double> c0 = phi0;
        if (model_.kind == ModelKind::free_translation) {
            c0[1] += 2.0 * sigma;
        } else {
            c0[0] = -0.5 * std::sqrt(2.0 * w0);
            c0[nd] = 0.0;
        }
        const Trajectory neg = hamiltonian_flow(cross, c0, model_.kind == ModelKind::free_translation ? 4.0 * sigma : std::sqrt(2.0 * w0), 400);
        const auto off = constancy_check(rc, neg);
        out["constancy"] = {{"on_ridge_deviation", on.max_relative_deviation},
                            {"on_ridge_pass", on.pass},
                            {"integrator", tr.integrator},
                            {"max_drift", tr.max_drift},
                            {"transversal_deviation", off.max_relative_deviation},
                            {"transversal_pass", off.pass}};

        const auto vol = invariant_volume(model_, w0, p0, sigma, chart, 4);
        out["invariant_volume"] = {{"value", vol.volume},
                                   {"reference", model_.kind == ModelKind::free_translation
                                                   ? model_.box_length
                                                   : std::pow(2.0 * std::numbers::pi, static_cast<double>(model_.dof()))},
                                   {"band_sigma", sigma}};

        // Mean energy from ρ_c and from the Wigner function of ρ_*.
        double Ec = 0.0, Ew = 0.0;
        std::vector<double> phi;
        for (std::size_t i = 0; i < chart.size(); ++i) {
            chart.point(i, phi);
            Ec += rc.values[i] * model_.H.evaluate(phi).real() * chart.cell_weight(i);
        }
        for (std::size_t i = 0; i < W_S_->chart.size(); ++i) {
            W_S_->chart.point(i, phi);
            Ew += (W_S_->values[i] * model_.H.evaluate(phi)).real() * W_S_->chart.cell_weight(i);
        }
        out["mean_energy"] = {{"classical", Ec}, {"wigner", Ew}, {"residual", std::abs(Ec - Ew)}};

        if (wants(OutputFormat::csv)) {
            if (chart.dof() == 1) write_csv(artifact("classical_distribution.csv"), rc);
            write_csv(artifact("trajectory.csv"), tr);
        }
        if (wants(OutputFormat::binary)) write_binary(artifact("classical_distribution.bin"), rc);
    }

    void stage_phase_space_route(nlohmann::json& out) {
        if (times_.empty()) times_ = pre_revival_times(rho_->omega, hbar_, cfg_.count("times.count"));
        const auto ev = phase_space_evolution(*rho_, *A_, model_, times_, hbar_);
        out["route_residual"] = ev.max_route_residual;
        out["limit_residual"] = ev.limit_residual;
        out["end_residual"] = ev.end_residual;
        out["invariant_quantum"] = complex_json(ev.invariant_quantum);
        out["invariant_phase_space"] = complex_json(ev.invariant_phase_space);
        if (wants(OutputFormat::csv)) {
            std::vector<TracePoint> q, p;
            for (std::size_t i = 0; i < ev.times.size(); ++i) {
                q.push_back({ev.times[i], ev.quantum[i], std::abs(ev.quantum[i])});
                p.push_back({ev.times[i], ev.phase_space[i], std::abs(ev.phase_space[i])});
            }
            write_csv(artifact("route_quantum.csv"), q);
            write_csv(artifact("route_phase_space.csv"), p);
        }
    }

    void stage_positivity(nlohmann::json& out) {
        if (rho_->regular.max_abs() > 0.0 && model_.kind == ModelKind::oscillator)
            out["note"] = "positivity is tested on the energy-diagonal part ρ(ω,ω)";
        PositivityOptions opt;
        opt.points = cfg_.count("positivity.points");
        opt.sets = cfg_.count("positivity.sets");
        opt.extent = cfg_.num("positivity.extent");
        opt.omega_max = cfg_.num("positivity.omega_max");
        opt.seed = cfg_.seed();
        const auto rep = positivity_check(singular_profile(cfg_), model_, cfg_.hbar_sequence(), opt);
        nlohmann::json per = nlohmann::json::array();
        for (const auto& l : rep.levels)
            per.push_back({{"hbar", l.hbar},
                           {"levels", l.levels},
                           {"f_at_zero", l.f_at_zero},
                           {"min_eigenvalue", l.min_eigenvalue},
                           {"min_wigner", l.min_wigner},
                           {"negative_mass_fraction", l.negative_mass_fraction}});
        out["per_hbar"] = per;
        out["bochner_min_eigenvalue"] = rep.bochner_min_eigenvalue;
        out["matrices_pass"] = rep.matrices_pass;
        out["negative_mass_decreasing"] = rep.negative_mass_decreasing;
        out["seed"] = rep.seed;
        out["points"] = rep.points;
        out["sets"] = rep.sets;
    }

    void stage_sharpening(nlohmann::json& out) {
        const auto hs = cfg_.hbar_sequence();
        if (model_.kind != ModelKind::free_translation)
            throw UnsupportedModelError("eigen-symbol sharpening needs exact kets (free_translation)");
        SharpeningOptions opt;
        opt.width0 = cfg_.num("sharpening.width0");
        opt.gamma = cfg_.num("sharpening.gamma");
        opt.hbar0 = hs.front();
        const double omega = cfg_.num("sharpening.level") * 2.0 * std::numbers::pi * hs.front() / model_.box_length;
        const auto rep = eigen_symbol_limit(model_, omega, hs, opt);
        out["omega"] = rep.omega;
        out["hbars"] = rep.hbars;
        out["windows"] = rep.windows;
        out["mass_fraction"] = rep.mass_fraction;
        out["width"] = rep.width;
        out["mass_monotone"] = rep.mass_monotone;
        out["width_decreasing"] = rep.width_decreasing;
        out["pass"] = rep.pass;
    }

    RunConfig cfg_;
    PipelineOptions opt_;
    ModelSpec model_;
    double hbar_ = 1.0;
    RunReport rep_;
    std::optional<StateFunctional> rho_, rho_star_;
    std::optional<Observable> A_;
    std::vector<double> times_;
    std::optional<PointerMap> U_;
    std::optional<DiagonalState> diag_;
    std::optional<PhaseSpaceFunction> W_S_;
};

inline RunReport run_pipeline(const RunConfig& cfg, const PipelineOptions& opt) { return Pipeline(cfg, opt).run(); }

/// Runs `stage` (with prerequisites) once per entry of the ℏ sequence, each into out_dir/hbar_<i>.
inline nlohmann::json run_sweep(const RunConfig& cfg, const PipelineOptions& opt, const std::string& stage = "decoherence") {
    nlohmann::json out = {{"stage", stage}, {"seed", cfg.seed()}, {"config", cfg.to_json()}, {"runs", nlohmann::json::array()}};
    const auto hs = cfg.hbar_sequence();
    for (std::size_t i = 0; i < hs.size(); ++i) {
        RunConfig c = cfg;
        c.values["hbar"] = detail::num(hs[i]);
        PipelineOptions o = opt;
        o.stage = stage;
        o.out_dir = opt.out_dir / ("hbar_" + std::to_string(i));
        const RunReport r = run_pipeline(c, o);
        out["runs"].push_back({{"hbar", hs[i]}, {"dir", o.out_dir.filename().string()}, {"stages", r.report["stages"]}});
    }
    if (opt.formats.count(OutputFormat::json)) write_json(opt.out_dir / "sweep.json", out);
    return out;
}

// ---------------------------------------------------------------------------
// Invariant suites.

struct CheckResult {
    std::string name;
    bool pass = false;
    double measured = 0.0;
    double bound = 0.0;
};

/// Structural invariants on the configured state and observable.
inline std::vector<CheckResult> run_checks(const RunConfig& cfg) {
    cfg.validate();
    const ModelSpec m = cfg.model();
    const double hbar = cfg.hbar();
    const StateFunctional rho = build_state(cfg, m, hbar);
    const Observable A = build_observable(cfg, m, hbar);
    std::vector<CheckResult> out;
    auto add = [&](std::string n, double v, double b) { out.push_back({std::move(n), v <= b, v, b}); };

    const auto d = check_state(rho);
    add("state.hermiticity", d.hermiticity_residual, 1e-12);
    add("state.normalization", d.normalization_residual, 1e-10);
    add("state.positivity", std::max(0.0, -d.min_eigenvalue), 1e-12);

    const auto [AS, AR] = split(A);
    add("algebra.split", std::abs(pair(rho, AS) + pair(rho, AR) - pair(rho, A)), 1e-12);
    add("algebra.orthogonality", std::abs(pair(decohered_state(rho), AR)), 0.0);

    const auto ts = pre_revival_times(rho.omega, hbar, 8);
    double group = 0.0, dual = 0.0, inv = 0.0;
    const cplx inv0 = pair_singular(rho, AS);
    for (double t : ts) {
        const Observable a = evolve_observable(evolve_observable(A, t, hbar), 0.5 * t, hbar);
        const Observable b = evolve_observable(A, 1.5 * t, hbar);
        for (std::size_t i = 0; i < a.regular.data().size(); ++i)
            group = std::max(group, std::abs(a.regular.data()[i] - b.regular.data()[i]));
        dual = std::max(dual, std::abs(pair(rho, evolve_observable(A, t, hbar)) - pair(evolve_state(rho, t, hbar), A)));
        inv = std::max(inv, std::abs(pair_singular(evolve_state(rho, t, hbar), AS) - inv0));
    }
    add("evolution.group_law", group, 1e-12);
    add("evolution.duality", dual, 1e-12);
    add("evolution.singular_invariance", inv, 1e-12);

    auto [U, D] = find_pointer_basis(decohered_state(rho));
    add("diagonal.unitarity", unitarity_residual(U), 1e-10);
    add("diagonal.offdiagonal_mass", offdiagonal_mass(transform_state(decohered_state(rho), U)), 1e-10);

    const PolySymbol q = PolySymbol::q(), p = PolySymbol::p();
    const PolySymbol comm = star_product(q, p, hbar) - star_product(p, q, hbar);
    add("phase_space.canonical_commutator", (comm - PolySymbol::constant(cplx(0.0, hbar))).norm(), 0.0);
    const PolySymbol f = q * q + p, g = q * p + p * p;
    add("phase_space.moyal_poisson_degree2", (moyal_bracket(f, g, hbar) - poisson_bracket(f, g)).norm(), 1e-14);
    const PolySymbol h = q + p * p;
    add("phase_space.associativity",
        (star_product(star_product(f, g, hbar), h, hbar) - star_product(f, star_product(g, h, hbar), hbar)).norm(), 1e-12);

    const auto mc = check_model(m, make_chart(make_grid({-2, 2}, 16, QuadratureRule::periodic, "q"),
                                              make_grid({-2, 2}, 16, QuadratureRule::periodic, "p")));
    if (m.dof() == 1) add("model.poisson_commuting", mc.poisson_residual, 1e-8);
    return out;
}

}  // namespace sidlab
