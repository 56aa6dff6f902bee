// sidlab: run, check, sweep, and export the decoherence and classical-limit pipeline.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "sidlab/pipeline.hpp"

namespace {

struct Args {
    std::string config;
    std::string out = "sidlab_out";
    std::optional<std::uint64_t> seed;
    std::string stage;
    std::vector<std::string> formats;
};

sidlab::RunConfig resolve(const Args& a) {
    sidlab::RunConfig cfg = sidlab::default_config();
    if (!a.config.empty()) {
        cfg = sidlab::load_config(a.config);
    } else {
        sidlab::apply_env_overrides(cfg);
    }
    if (a.seed) cfg.values["seed"] = std::to_string(*a.seed);
    cfg.validate();
    return cfg;
}

sidlab::PipelineOptions options(const Args& a) {
    sidlab::PipelineOptions o;
    o.out_dir = a.out;
    if (!a.stage.empty()) {
        sidlab::stage_prerequisites(a.stage);
        o.stage = a.stage;
    }
    if (!a.formats.empty()) {
        o.formats.clear();
        for (const auto& f : a.formats) o.formats.insert(sidlab::parse_format(f));
    }
    return o;
}

void print_stages(const sidlab::RunReport& r) {
    const auto& stages = r.report["stages"];
    for (const auto& name : sidlab::stage_names())
        if (stages.contains(name))
            std::printf("%-18s %-12s %8.3fs\n", name.c_str(), stages[name].value("status", "ok").c_str(), r.timing.value(name, 0.0));
}

std::string config_help() {
    std::ostringstream os;
    os << "Config keys (key = value; override with " << sidlab::kEnvPrefix << "<KEY>):\n";
    for (const auto& k : sidlab::config_keys()) os << "  " << k.key << " [" << k.value << "]  " << k.help << '\n';
    return os.str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Decoherence and classical-limit pipeline for spectral state functionals"};
    app.footer(config_help());
    app.require_subcommand(1);
    Args a;

    auto common = [&](CLI::App* sub, bool stage, bool format) {
        sub->add_option("--config", a.config, "key-value config file")->check(CLI::ExistingFile);
        sub->add_option("--out", a.out, "output directory");
        sub->add_option("--seed", a.seed, "random seed (overrides the config)");
        if (stage)
            sub->add_option("--stage", a.stage, "run this stage and its prerequisites")
                ->check(CLI::IsMember(sidlab::stage_names()));
        if (format)
            sub->add_option("--format", a.formats, "csv | json | binary (repeatable)")
                ->check(CLI::IsMember({"csv", "json", "binary"}));
    };
    CLI::App* run = app.add_subcommand("run", "run the full pipeline and write report.json plus data files");
    common(run, true, false);
    CLI::App* check = app.add_subcommand("check", "run the invariant suites only");
    common(check, false, false);
    CLI::App* sweep = app.add_subcommand("sweep", "repeat a stage over the hbar sequence");
    common(sweep, true, false);
    CLI::App* exp = app.add_subcommand("export", "write stage outputs in the selected formats");
    common(exp, true, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        const sidlab::RunConfig cfg = resolve(a);
        if (check->parsed()) {
            bool ok = true;
            for (const auto& c : sidlab::run_checks(cfg)) {
                std::printf("%s %-36s %.3e (bound %.1e)\n", c.pass ? "PASS" : "FAIL", c.name.c_str(), c.measured, c.bound);
                ok = ok && c.pass;
            }
            return ok ? 0 : 1;
        }
        const sidlab::PipelineOptions opt = options(a);
        if (sweep->parsed()) {
            const auto j = sidlab::run_sweep(cfg, opt, a.stage.empty() ? "decoherence" : a.stage);
            std::printf("%zu runs written under %s\n", j["runs"].size(), a.out.c_str());
            return 0;
        }
        const sidlab::RunReport r = sidlab::run_pipeline(cfg, opt);
        print_stages(r);
        std::printf("%zu artifacts written under %s\n", r.artifacts.size(), a.out.c_str());
        return 0;
    } catch (const sidlab::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const sidlab::StageError& e) {
        std::cerr << "stage error " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 4;
    }
}
