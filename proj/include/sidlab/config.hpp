#pragma once

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "io.hpp"
#include "models.hpp"

namespace sidlab {

/// Documented configuration key with its default value.
struct ConfigKey {
    const char* key;
    const char* value;
    const char* help;
};

inline const std::vector<ConfigKey>& config_keys() {
    static const std::vector<ConfigKey> keys = {
        {"model", "free_translation", "free_translation | oscillator | two_oscillator"},
        {"model.levels", "32", "number of ω levels"},
        {"model.box_length", "8", "period L of the free-translation box"},
        {"model.chart_points", "64", "nodes per axis of the ket chart"},
        {"hbar", "1", "ℏ used by the evolution and phase-space stages"},
        {"hbar_sequence", "1,0.5,0.25,0.125,0.0625", "decreasing ℏ values for sweeps"},
        {"times.count", "64", "samples on [0, πℏ/Δω]"},
        {"epsilon", "0.01", "decoherence threshold"},
        {"sigma", "0.25", "width of the regularized deltas in ρ_c"},
        {"star.order", "6", "truncation order R of grid star products"},
        {"seed", "7", "seed of every random draw"},
        {"state.singular", "gaussian", "gaussian | two_gaussian | none"},
        {"state.singular.center", "12", "centre of the (first) Gaussian in ω"},
        {"state.singular.width", "3", "width of the Gaussian(s) in ω"},
        {"state.singular.center2", "0", "centre of the second Gaussian (two_gaussian)"},
        {"state.singular.ratio", "0.5", "amplitude of the second Gaussian (two_gaussian)"},
        {"state.label_decay", "0.5", "ρ(ω,k,k) ∝ e^{−decay·k} over extra labels"},
        {"state.regular", "gaussian_coherence", "gaussian_coherence | none"},
        {"state.regular.amplitude", "0.5", "coherence amplitude"},
        {"state.regular.center", "12", "centre of g(ω)"},
        {"state.regular.width", "3", "width b of g(ω)"},
        {"state.regular.coherence", "1.5", "spectral width s of the ω−ω′ factor"},
        {"observable.singular", "energy", "energy | gaussian | one"},
        {"observable.singular.center", "12", "centre (gaussian)"},
        {"observable.singular.width", "3", "width (gaussian)"},
        {"observable.regular", "constant", "gaussian | constant | none"},
        {"observable.regular.amplitude", "1", "amplitude of the regular kernel"},
        {"observable.regular.width", "2", "width in ω−ω′ (gaussian)"},
        {"classical.chart_points", "64", "nodes per axis of the ρ_c chart"},
        {"classical.margin", "2", "chart margin beyond the populated energies"},
        {"positivity.points", "8", "points per set in the ℏ-positive-type test"},
        {"positivity.sets", "20", "number of point sets"},
        {"positivity.extent", "2", "points drawn uniformly in [−extent, extent]²"},
        {"positivity.omega_max", "6", "energy cut-off of the level sum"},
        {"sharpening.width0", "0.5", "spectral window Δω at ℏ = hbar_sequence[0]"},
        {"sharpening.gamma", "0.5", "Δω ∝ ℏ^gamma"},
        {"sharpening.level", "2", "window centred on this level at the first ℏ"},
    };
    return keys;
}

inline constexpr const char* kEnvPrefix = "SIDLAB_";

/// Environment variable overriding `key`: prefix + upper case, dots to underscores.
inline std::string env_name(const std::string& key) {
    std::string s = kEnvPrefix;
    for (char c : key) s += c == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return s;
}

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Fully resolved run configuration.
struct RunConfig {
    std::map<std::string, std::string> values;

    const std::string& str(const std::string& key) const {
        auto it = values.find(key);
        if (it == values.end()) throw ConfigError("unknown config key '" + key + "'");
        return it->second;
    }

    double num(const std::string& key) const {
        const std::string& s = str(key);
        try {
            std::size_t pos = 0;
            const double v = std::stod(s, &pos);
            if (pos != s.size() || !std::isfinite(v)) throw std::invalid_argument("");
            return v;
        } catch (const std::exception&) {
            throw ConfigError("config key '" + key + "': expected a number, got '" + s + "'");
        }
    }

    std::size_t count(const std::string& key) const {
        const double v = num(key);
        if (v < 0 || v != std::floor(v) || v > 1e9) throw ConfigError("config key '" + key + "': expected a count");
        return static_cast<std::size_t>(v);
    }

    std::uint64_t seed() const {
        const std::string& s = str("seed");
        try {
            if (s.empty() || s[0] == '-' || s[0] == '+') throw std::invalid_argument("");
            std::size_t pos = 0;
            const auto v = std::stoull(s, &pos);
            if (pos != s.size()) throw std::invalid_argument("");
            return v;
        } catch (const std::exception&) {
            throw ConfigError("config key 'seed': expected a non-negative integer, got '" + s + "'");
        }
    }

    std::vector<double> list(const std::string& key) const {
        std::vector<double> out;
        std::stringstream ss(str(key));
        std::string item;
        while (std::getline(ss, item, ',')) {
            try {
                out.push_back(std::stod(item));
            } catch (const std::exception&) {
                throw ConfigError("config key '" + key + "': bad list item '" + item + "'");
            }
        }
        return out;
    }

    double hbar() const { return num("hbar"); }
    std::vector<double> hbar_sequence() const { return list("hbar_sequence"); }

    ModelSpec model() const {
        const ModelKind k = parse_model(str("model"));
        ModelSpec m;
        switch (k) {
            case ModelKind::free_translation:
                m = free_translation_model(num("model.box_length"), count("model.levels"), count("model.chart_points"));
                break;
            case ModelKind::oscillator: m = oscillator_model(count("model.levels"), count("model.chart_points")); break;
            case ModelKind::two_oscillator: m = two_oscillator_model(count("model.levels"), count("model.chart_points")); break;
        }
        m.hbar_sequence = hbar_sequence();
        return m;
    }

    /// Throws ConfigError when a value is outside its documented range.
    void validate() const {
        parse_model(str("model"));
        auto positive = [&](const char* k) {
            if (!(num(k) > 0.0)) throw ConfigError(std::string("config key '") + k + "' must be positive");
        };
        for (const char* k : {"hbar", "model.box_length", "sigma", "epsilon", "state.singular.width", "state.regular.width",
                              "state.regular.coherence", "observable.singular.width", "observable.regular.width",
                              "positivity.extent", "positivity.omega_max", "sharpening.width0", "classical.margin"})
            positive(k);
        if (num("epsilon") >= 1.0) throw ConfigError("config key 'epsilon' must lie in (0,1)");
        if (count("model.levels") < 2) throw ConfigError("config key 'model.levels' must be at least 2");
        if (count("model.chart_points") < 8) throw ConfigError("config key 'model.chart_points' must be at least 8");
        if (count("times.count") < 2) throw ConfigError("config key 'times.count' must be at least 2");
        if (count("classical.chart_points") < 8) throw ConfigError("config key 'classical.chart_points' must be at least 8");
        if (count("positivity.points") < 1 || count("positivity.sets") < 1)
            throw ConfigError("positivity.points and positivity.sets must be positive");
        const auto R = count("star.order");
        if (R > static_cast<std::size_t>(kMaxGridStarOrder)) throw ConfigError("config key 'star.order' exceeds the supported maximum");
        const auto hs = hbar_sequence();
        if (hs.size() < 2) throw ConfigError("config key 'hbar_sequence' needs at least two values");
        for (std::size_t i = 0; i < hs.size(); ++i)
            if (!(hs[i] > 0.0) || (i > 0 && !(hs[i] < hs[i - 1])))
                throw ConfigError("config key 'hbar_sequence' must be positive and strictly decreasing");
        for (const char* k : {"state.singular", "state.regular", "observable.singular", "observable.regular"}) {
            static const std::map<std::string, std::vector<std::string>> allowed = {
                {"state.singular", {"gaussian", "two_gaussian", "none"}},
                {"state.regular", {"gaussian_coherence", "none"}},
                {"observable.singular", {"energy", "gaussian", "one"}},
                {"observable.regular", {"gaussian", "constant", "none"}},
            };
            const auto& ids = allowed.at(k);
            if (std::find(ids.begin(), ids.end(), str(k)) == ids.end())
                throw ConfigError(std::string("config key '") + k + "': unknown expression id '" + str(k) + "'");
        }
        seed();
    }

    nlohmann::json to_json() const {
        nlohmann::json j = nlohmann::json::object();
        for (const auto& [k, v] : values) j[k] = v;
        return j;
    }
};

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline RunConfig default_config() {
    RunConfig c;
    for (const auto& k : config_keys()) c.values[k.key] = k.value;
    return c;
}

/// Applies `key = value` lines (# starts a comment); unknown keys are rejected.
inline void apply_config_text(RunConfig& c, const std::string& text, const std::string& origin = "<text>") {
    std::istringstream is(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
        if (!c.values.count(key)) throw ConfigError(origin + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
        c.values[key] = value;
    }
}

inline void apply_env_overrides(RunConfig& c) {
    for (auto& [k, v] : c.values)
        if (const char* e = std::getenv(env_name(k).c_str())) v = e;
}

/// Defaults, then the file, then environment overrides.
inline RunConfig load_config(const std::filesystem::path& path) {
    RunConfig c = default_config();
    std::ifstream is(path);
    if (!is) throw IoError(path, "cannot open config");
    std::stringstream ss;
    ss << is.rdbuf();
    apply_config_text(c, ss.str(), path.string());
    apply_env_overrides(c);
    c.validate();
    return c;
}

}  // namespace sidlab
