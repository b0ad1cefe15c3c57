// config.hpp
// Experiment configuration: flat "key = value" text grouped in named
// sections. Unknown sections or keys are rejected; all numeric fields are
// range-checked at parse time.

#pragma once

#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include "foliation.hpp"

namespace sadsfol {

struct ExperimentConfig {
    double mass = 1.0;
    int L = 15;

    PerturbationSpec perturbation;

    double ds = 0.1;
    double s_max = 8.0;
    double tol = 1e-10;
    int max_iter = 12;

    Variant variant = Variant::minimal;
    unsigned seed = 12345;
    std::string out_dir = "out";

    // matching window
    double match_center = 4.0;
    double match_halfwidth = 0.2;
    int match_points = 5;

    FoliationSettings foliation_settings() const {
        FoliationSettings fs;
        fs.ds = ds;
        fs.s_max = s_max;
        fs.variant = variant;
        fs.solver.tol = tol;
        fs.solver.max_iter = max_iter;
        fs.seed = seed;
        return fs;
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

inline double parse_number(const std::string& sec, const std::string& key,
                           const std::string& val) {
    std::size_t pos = 0;
    double x = 0;
    try {
        x = std::stod(val, &pos);
    } catch (...) {
        throw ConfigError("[" + sec + "] " + key + ": not a number: '" + val + "'");
    }
    if (pos != val.size())
        throw ConfigError("[" + sec + "] " + key + ": trailing junk in '" + val + "'");
    return x;
}

inline int parse_int(const std::string& sec, const std::string& key,
                     const std::string& val) {
    const double x = parse_number(sec, key, val);
    const int i = int(x);
    if (double(i) != x)
        throw ConfigError("[" + sec + "] " + key + ": expected an integer");
    return i;
}

}  // namespace detail

inline ExperimentConfig parse_config_text(std::istream& in) {
    ExperimentConfig cfg;
    static const std::map<std::string, std::set<std::string>> schema = {
        {"model", {"mass"}},
        {"resolution", {"L"}},
        {"perturbation", {"family", "epsilon", "b_l", "b_m", "a_l", "a_m", "mu"}},
        {"continuation", {"ds", "s_max", "tol", "max_iter"}},
        {"run", {"variant", "seed", "out_dir"}},
        {"matching", {"center", "halfwidth", "points"}},
    };

    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find_first_of("#;");
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("line " + std::to_string(lineno) + ": bad section header");
            section = detail::trim(line.substr(1, line.size() - 2));
            if (!schema.count(section))
                throw ConfigError("unknown section [" + section + "]");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string val = detail::trim(line.substr(eq + 1));
        if (section.empty())
            throw ConfigError("line " + std::to_string(lineno) + ": key outside a section");
        if (!schema.at(section).count(key))
            throw ConfigError("unknown key '" + key + "' in section [" + section + "]");

        if (section == "model" && key == "mass")
            cfg.mass = detail::parse_number(section, key, val);
        else if (section == "resolution" && key == "L")
            cfg.L = detail::parse_int(section, key, val);
        else if (section == "perturbation") {
            if (key == "family") cfg.perturbation.family = family_from_string(val);
            else if (key == "epsilon") cfg.perturbation.epsilon = detail::parse_number(section, key, val);
            else if (key == "b_l") cfg.perturbation.b_l = detail::parse_int(section, key, val);
            else if (key == "b_m") cfg.perturbation.b_m = detail::parse_int(section, key, val);
            else if (key == "a_l") cfg.perturbation.a_l = detail::parse_int(section, key, val);
            else if (key == "a_m") cfg.perturbation.a_m = detail::parse_int(section, key, val);
            else if (key == "mu") cfg.perturbation.mu = detail::parse_number(section, key, val);
        } else if (section == "continuation") {
            if (key == "ds") cfg.ds = detail::parse_number(section, key, val);
            else if (key == "s_max") cfg.s_max = detail::parse_number(section, key, val);
            else if (key == "tol") cfg.tol = detail::parse_number(section, key, val);
            else if (key == "max_iter") cfg.max_iter = detail::parse_int(section, key, val);
        } else if (section == "run") {
            if (key == "variant") cfg.variant = variant_from_string(val);
            else if (key == "seed") cfg.seed = unsigned(detail::parse_int(section, key, val));
            else if (key == "out_dir") cfg.out_dir = val;
        } else if (section == "matching") {
            if (key == "center") cfg.match_center = detail::parse_number(section, key, val);
            else if (key == "halfwidth") cfg.match_halfwidth = detail::parse_number(section, key, val);
            else if (key == "points") cfg.match_points = detail::parse_int(section, key, val);
        }
    }

    // validation
    if (!(cfg.mass > 0.0)) throw ConfigError("[model] mass must be positive");
    if (cfg.L < 4 || cfg.L > 40) throw ConfigError("[resolution] L must lie in [4, 40]");
    if (!(cfg.ds > 0.0 && cfg.ds <= 0.2))
        throw ConfigError("[continuation] ds must lie in (0, 0.2]");
    if (!(cfg.s_max > 0.0 && cfg.s_max <= 14.0))
        throw ConfigError("[continuation] s_max must lie in (0, 14]");
    if (!(cfg.tol > 0.0)) throw ConfigError("[continuation] tol must be positive");
    if (cfg.max_iter < 1) throw ConfigError("[continuation] max_iter must be >= 1");
    if (cfg.perturbation.b_l < 0 || std::abs(cfg.perturbation.b_m) > cfg.perturbation.b_l)
        throw ConfigError("[perturbation] bad harmonic indices (b_l, b_m)");
    if (cfg.perturbation.a_l < 0 || std::abs(cfg.perturbation.a_m) > cfg.perturbation.a_l)
        throw ConfigError("[perturbation] bad harmonic indices (a_l, a_m)");
    if (cfg.match_points < 1 || cfg.match_points > 50)
        throw ConfigError("[matching] points must lie in [1, 50]");
    return cfg;
}

inline ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    return parse_config_text(in);
}

}  // namespace sadsfol
