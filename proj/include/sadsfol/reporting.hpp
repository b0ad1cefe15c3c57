// reporting.hpp
// Bit-stable output artifacts: per-leaf CSV, structured JSON report, and the
// human-readable PASS/FAIL check list. All floating-point output uses
// full round-trip precision ("%.17g").

#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "config.hpp"

namespace sadsfol {

using ordered_json = nlohmann::ordered_json;

inline std::string fmt17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

struct CheckList {
    struct Item {
        std::string name;
        bool pass;
        bool informational;
        std::string detail;
    };
    std::vector<Item> items;

    void add(const std::string& name, bool pass, const std::string& detail = "") {
        items.push_back({name, pass, false, detail});
    }
    void info(const std::string& name, const std::string& detail = "") {
        items.push_back({name, true, true, detail});
    }
    bool all_pass() const {
        for (const auto& it : items)
            if (!it.informational && !it.pass) return false;
        return true;
    }
    std::string render() const {
        std::string out;
        for (const auto& it : items) {
            out += it.informational ? "INFO" : (it.pass ? "PASS" : "FAIL");
            out += ": " + it.name;
            if (!it.detail.empty()) out += " (" + it.detail + ")";
            out += "\n";
        }
        return out;
    }
};

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write file: " + path);
    out << text;
}

inline std::string leaves_csv(const FoliationReport& rep) {
    std::string s =
        "t,s_base,H_const,area,m_H,stability_eig,lapse_min,s_inner,s_outer,"
        "sup_w,int_ds_tan_sq,int_ring_A_sq,lemma51_residual,min_R_plus_6\n";
    for (const auto& lr : rep.leaves) {
        s += std::to_string(lr.t_index);
        for (double v : {lr.s_base, lr.H_const, lr.area, lr.hawking_mass,
                         lr.stability_eig, lr.lapse_min, lr.s_inner, lr.s_outer,
                         lr.sup_w, lr.int_ds_tan_sq, lr.int_ring_A_sq,
                         lr.lemma_residual, lr.min_R_plus_6})
            s += "," + fmt17(v);
        s += "\n";
    }
    return s;
}

inline ordered_json config_json(const ExperimentConfig& cfg) {
    ordered_json j;
    j["mass"] = cfg.mass;
    j["L"] = cfg.L;
    j["family"] = family_to_string(cfg.perturbation.family);
    j["epsilon"] = cfg.perturbation.epsilon;
    j["b_l"] = cfg.perturbation.b_l;
    j["b_m"] = cfg.perturbation.b_m;
    j["a_l"] = cfg.perturbation.a_l;
    j["a_m"] = cfg.perturbation.a_m;
    j["mu"] = cfg.perturbation.mu;
    j["ds"] = cfg.ds;
    j["s_max"] = cfg.s_max;
    j["tol"] = cfg.tol;
    j["max_iter"] = cfg.max_iter;
    j["variant"] = variant_to_string(cfg.variant);
    j["seed"] = cfg.seed;
    return j;
}

inline ordered_json report_json(const ExperimentConfig& cfg, const FoliationReport& rep,
                                const MonotonicityReport& mono, const MassLimit& ml,
                                const DecaySlopes& dec, const PenroseVerdict& pv) {
    ordered_json j;
    j["config"] = config_json(cfg);

    j["hypotheses"]["min_R_plus_6"] = rep.flags.min_R_plus_6;
    j["hypotheses"]["scalar_ok"] = rep.flags.scalar_ok();
    j["hypotheses"]["decay_distance"] = rep.flags.decay_distance;
    j["hypotheses"]["boundary_H_sup"] = rep.flags.boundary_H_sup;

    ordered_json leaves = ordered_json::array();
    for (const auto& lr : rep.leaves) {
        ordered_json L;
        L["t"] = lr.t_index;
        L["s_base"] = lr.s_base;
        L["H_const"] = lr.H_const;
        L["area"] = lr.area;
        L["m_H"] = lr.hawking_mass;
        L["stability_eig"] = lr.stability_eig;
        L["lapse_min"] = lr.lapse_min;
        L["s_inner"] = lr.s_inner;
        L["s_outer"] = lr.s_outer;
        L["sup_w"] = lr.sup_w;
        L["int_ds_tan_sq"] = lr.int_ds_tan_sq;
        L["int_ring_A_sq"] = lr.int_ring_A_sq;
        L["lemma51_residual"] = lr.lemma_residual;
        L["min_R_plus_6"] = lr.min_R_plus_6;
        L["u_sup"] = lr.u_sup;
        leaves.push_back(L);
    }
    j["leaves"] = leaves;

    j["monotonicity"]["hypothesis_ok"] = mono.hypothesis_ok;
    j["monotonicity"]["min_delta_mH"] = mono.min_delta_mH;
    j["monotonicity"]["monotone_ok"] = mono.monotone_ok;
    double max_fv = 0.0;
    for (double r : mono.fv_resid) max_fv = std::max(max_fv, std::fabs(r));
    j["monotonicity"]["max_first_variation_residual"] = max_fv;

    j["mass_limit"]["available"] = ml.available;
    j["mass_limit"]["m_inf"] = ml.m_inf;
    j["mass_limit"]["fit_residual"] = ml.fit_residual;
    j["mass_limit"]["fitted_exponent"] = ml.fitted_exponent;
    j["mass_limit"]["within_tolerance"] = ml.within_tolerance;
    j["mass_limit"]["tail_count"] = ml.tail_count;

    j["decay"]["slope_sup_w"] = dec.slope_sup_w;
    j["decay"]["slope_ds_tan"] = dec.slope_ds_tan;
    j["decay"]["slope_ring_A"] = dec.slope_ring_A;
    j["decay"]["sup_w_exact"] = dec.sup_w_exact;
    j["decay"]["ds_tan_exact"] = dec.ds_tan_exact;
    j["decay"]["ring_A_exact"] = dec.ring_A_exact;
    j["decay"]["lemma_scaled_max"] = dec.lemma_scaled_max;
    j["decay"]["lemma_scaled_min"] = dec.lemma_scaled_min;
    j["decay"]["tail_count"] = dec.tail_count;

    j["penrose"]["variant"] = variant_to_string(pv.variant);
    j["penrose"]["lhs"] = pv.lhs;
    j["penrose"]["mass"] = pv.mass;
    j["penrose"]["mass_limit"] = pv.mass_limit;
    j["penrose"]["gap_vs_mass"] = pv.gap_vs_mass;
    j["penrose"]["gap_vs_limit"] = pv.gap_vs_limit;
    j["penrose"]["hypotheses_ok"] = pv.hypotheses_ok;
    j["penrose"]["inequality_ok"] = pv.inequality_ok;
    return j;
}

inline void write_artifacts(const std::string& dir, const ExperimentConfig& cfg,
                            const FoliationReport& rep, const MonotonicityReport& mono,
                            const MassLimit& ml, const DecaySlopes& dec,
                            const PenroseVerdict& pv, const CheckList& checks) {
    std::filesystem::create_directories(dir);
    write_text(dir + "/leaves.csv", leaves_csv(rep));
    write_text(dir + "/report.json",
               report_json(cfg, rep, mono, ml, dec, pv).dump(2) + "\n");
    write_text(dir + "/checks.txt", checks.render());
}

}  // namespace sadsfol
