// Configuration parsing, validation, and deterministic report writers.

#include <gtest/gtest.h>

#include <sadsfol/config.hpp>
#include <sadsfol/reporting.hpp>
#include <sstream>

using namespace sadsfol;

namespace {

ExperimentConfig parse(const std::string& text) {
    std::istringstream in(text);
    return parse_config_text(in);
}

}  // namespace

TEST(Config, ParsesAllSections) {
    const auto cfg = parse(R"(
# comment
[model]
mass = 2.5
[resolution]
L = 10
[perturbation]
family = sphere
epsilon = 1e-3
b_l = 3
b_m = -2
[continuation]
ds = 0.05
s_max = 7.0
tol = 1e-11
max_iter = 10
[run]
variant = h2
seed = 99
out_dir = /tmp/x
[matching]
center = 4.5
halfwidth = 0.1
points = 3
)");
    EXPECT_EQ(cfg.mass, 2.5);
    EXPECT_EQ(cfg.L, 10);
    EXPECT_EQ(cfg.perturbation.family, FamilyTag::sphere);
    EXPECT_EQ(cfg.perturbation.b_l, 3);
    EXPECT_EQ(cfg.perturbation.b_m, -2);
    EXPECT_EQ(cfg.ds, 0.05);
    EXPECT_EQ(cfg.variant, Variant::h2);
    EXPECT_EQ(cfg.seed, 99u);
    EXPECT_EQ(cfg.out_dir, "/tmp/x");
    EXPECT_EQ(cfg.match_points, 3);
}

TEST(Config, DefaultsAreUsable) {
    const auto cfg = parse("[model]\nmass = 1.0\n");
    EXPECT_EQ(cfg.L, 15);
    EXPECT_EQ(cfg.perturbation.family, FamilyTag::gm);
    EXPECT_EQ(cfg.variant, Variant::minimal);
}

TEST(Config, RejectsUnknownKeysAndSections) {
    EXPECT_THROW(parse("[model]\nmasss = 1\n"), ConfigError);
    EXPECT_THROW(parse("[modle]\nmass = 1\n"), ConfigError);
    EXPECT_THROW(parse("mass = 1\n"), ConfigError);  // key outside section
}

TEST(Config, ValidatesRanges) {
    EXPECT_THROW(parse("[model]\nmass = 0\n"), ConfigError);
    EXPECT_THROW(parse("[model]\nmass = -1\n"), ConfigError);
    EXPECT_THROW(parse("[continuation]\nds = 0.5\n"), ConfigError);
    EXPECT_THROW(parse("[continuation]\nds = 0\n"), ConfigError);
    EXPECT_THROW(parse("[resolution]\nL = 2\n"), ConfigError);
    EXPECT_THROW(parse("[perturbation]\nb_l = 1\nb_m = 2\n"), ConfigError);
    EXPECT_THROW(parse("[perturbation]\nfamily = quux\n"), ConfigError);
    EXPECT_THROW(parse("[run]\nvariant = both\n"), ConfigError);
    EXPECT_THROW(parse("[model]\nmass = 1x\n"), ConfigError);
}

TEST(Reporting, Fmt17RoundTrips) {
    for (double x : {1.0, -0.1234567890123456, 3.0e-11, 2.0 / 3.0}) {
        const double back = std::stod(fmt17(x));
        EXPECT_EQ(back, x);
    }
}

TEST(Reporting, CsvDeterministicAndComplete) {
    auto bg = std::make_shared<const BackgroundModel>(1.0);
    auto grid = make_grid(6);
    PerturbationSpec sp;
    PerturbedMetric g(bg, sp);
    FoliationSettings fs;
    fs.ds = 0.2;
    fs.s_max = 2.0;
    const auto rep = foliate(g, *grid, fs);
    const std::string a = leaves_csv(rep);
    const std::string b = leaves_csv(rep);
    EXPECT_EQ(a, b);
    EXPECT_NE(a.find("t,s_base,H_const,area,m_H,stability_eig,lapse_min,"
                     "s_inner,s_outer,sup_w,int_ds_tan_sq,int_ring_A_sq,"
                     "lemma51_residual,min_R_plus_6"),
              std::string::npos);
    // one header + one line per leaf
    EXPECT_EQ(std::count(a.begin(), a.end(), '\n'), 1 + long(rep.leaves.size()));
}

TEST(Reporting, CheckListRendering) {
    CheckList c;
    c.add("alpha", true, "x = 1");
    c.add("beta", false);
    c.info("gamma", "note");
    const std::string r = c.render();
    EXPECT_NE(r.find("PASS: alpha (x = 1)"), std::string::npos);
    EXPECT_NE(r.find("FAIL: beta"), std::string::npos);
    EXPECT_NE(r.find("INFO: gamma (note)"), std::string::npos);
    EXPECT_FALSE(c.all_pass());
}

TEST(Reporting, JsonContainsVerdict) {
    auto bg = std::make_shared<const BackgroundModel>(1.0);
    auto grid = make_grid(6);
    PerturbationSpec sp;
    PerturbedMetric g(bg, sp);
    FoliationSettings fs;
    fs.ds = 0.2;
    fs.s_max = 6.0;
    const auto rep = foliate(g, *grid, fs);
    const auto mono = monotonicity_report(*grid, rep);
    const auto ml = mass_limit_estimate(*bg, rep);
    const auto dec = decay_diagnostics(*bg, rep);
    const auto pv = penrose_report(rep, ml);
    ExperimentConfig cfg;
    const auto j = report_json(cfg, rep, mono, ml, dec, pv);
    EXPECT_TRUE(j.contains("penrose"));
    EXPECT_NEAR(j["penrose"]["lhs"].get<double>(), 1.0, 1e-9);
    EXPECT_EQ(j["leaves"].size(), rep.leaves.size());
    // deterministic serialization
    EXPECT_EQ(j.dump(2), report_json(cfg, rep, mono, ml, dec, pv).dump(2));
}
