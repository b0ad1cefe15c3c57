// Acceptance suite: the end-to-end contract of the library, one test per
// criterion, each printing a PASS/FAIL line. Shared fixtures (foliations at
// the working resolution) are computed once and reused across criteria.

#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <memory>
#include <sadsfol/foliation.hpp>

using namespace sadsfol;

namespace {

std::string fmt_sci(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3g", x);
    return buf;
}

void report(int criterion, bool pass, const std::string& what) {
    std::printf("[criterion %2d] %s: %s\n", criterion, pass ? "PASS" : "FAIL",
                what.c_str());
    std::fflush(stdout);
}

struct Shared {
    std::shared_ptr<const BackgroundModel> bg = std::make_shared<BackgroundModel>(1.0);
    GridPtr grid = make_grid(15);

    PerturbedMetric sphere_metric() const {
        PerturbationSpec sp;
        sp.family = FamilyTag::sphere;
        sp.epsilon = 1e-3;
        return PerturbedMetric(bg, sp);
    }
    PerturbedMetric conformal_metric() const {
        PerturbationSpec sp;
        sp.family = FamilyTag::conformal;
        sp.epsilon = 1e-3;
        return PerturbedMetric(bg, sp);
    }
    PerturbedMetric gm_metric() const {
        PerturbationSpec sp;
        return PerturbedMetric(bg, sp);
    }

    const FoliationReport& sphere_foliation() {
        if (!sphere_rep_) {
            const auto m = sphere_metric();
            FoliationSettings fs;
            fs.ds = 0.1;
            fs.s_max = 8.0;
            sphere_rep_ = foliate(m, *grid, fs);
        }
        return *sphere_rep_;
    }

    const FoliationReport& conformal_foliation() {
        if (!conf_rep_) {
            const auto m = conformal_metric();
            FoliationSettings fs;
            fs.ds = 0.1;
            fs.s_max = 6.5;
            conf_rep_ = foliate(m, *grid, fs);
        }
        return *conf_rep_;
    }

  private:
    std::optional<FoliationReport> sphere_rep_, conf_rep_;
};

Shared& shared() {
    static Shared s;
    return s;
}

// RK4 oracle for r(s), seeded by the leading-order series off the degenerate
// fixed point.
double rk4_r_of_s(const BackgroundModel& bg, double s_target) {
    const double s0 = 0.001;
    const double k = 2.0 * bg.horizon() + 2.0 * bg.mass() / (bg.horizon() * bg.horizon());
    double r = bg.horizon() + 0.25 * k * s0 * s0;
    const double h = 1e-5;
    double s = s0;
    auto f = [&bg](double rr) { return bg.rho(rr); };
    while (s + h <= s_target) {
        const double k1 = f(r), k2 = f(r + 0.5 * h * k1), k3 = f(r + 0.5 * h * k2),
                     k4 = f(r + h * k3);
        r += h * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0;
        s += h;
    }
    const double hh = s_target - s;
    const double k1 = f(r), k2 = f(r + 0.5 * hh * k1), k3 = f(r + 0.5 * hh * k2),
                 k4 = f(r + hh * k3);
    return r + hh * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0;
}

double tail_order(const std::vector<double>& hist) {
    const double floor_est = std::max(1e-13, 5.0 * hist.back());
    std::vector<double> r;
    for (double x : hist)
        if (x > floor_est) r.push_back(x);
    if (r.size() < 3) return std::numeric_limits<double>::quiet_NaN();
    const double r0 = r[r.size() - 3], r1 = r[r.size() - 2], r2 = r[r.size() - 1];
    return std::log(r2 / r1) / std::log(r1 / r0);
}

}  // namespace

TEST(Acceptance, Criterion01_BackgroundExactness) {
    bool pass = true;
    double worstR = 0, worstRic = 0, worstMh = 0;
    for (double m : {0.5, 1.0, 2.5}) {
        auto bg = std::make_shared<const BackgroundModel>(m);
        PerturbationSpec sp;
        PerturbedMetric g(bg, sp);
        std::mt19937_64 rng(321);
        std::uniform_real_distribution<double> U(0.0, 1.0);
        for (int i = 0; i < 50; ++i) {
            const double s = 9.0 * U(rng) * U(rng);
            const double th = std::clamp(std::acos(1.0 - 2.0 * U(rng)), 0.05, M_PI - 0.05);
            const double ph = 2.0 * M_PI * U(rng);
            const auto cv = g.curvature(s, th, ph);
            const auto mj = g.metric_at(s, th, ph);
            const double r3 = std::pow(bg->r_of_s(s), 3);
            worstR = std::max(worstR, std::fabs(cv.scalar + 6.0));
            worstRic = std::max({worstRic,
                                 std::fabs(cv.ric(0, 0) / mj.g(0, 0) + 2.0 + 2.0 * m / r3),
                                 std::fabs(cv.ric(1, 1) / mj.g(1, 1) + 2.0 - m / r3)});
        }
        // Hawking mass of 20 coordinate spheres through the full geometry stack
        auto grid = shared().grid;
        const auto cache = MetricNodeCache::build(*grid, g);
        for (int i = 0; i < 20; ++i) {
            const double s = 0.2 + 0.3 * i;
            GraphSurface surf{s, VectorXd::Zero(grid->ncoef())};
            const auto sg = compute_geometry(g, *grid, cache, surf, false);
            worstMh = std::max(worstMh, std::fabs(hawking_mass(*grid, sg) - m));
        }
    }
    pass = worstR <= 1e-8 && worstRic <= 1e-8 && worstMh <= 1e-8;
    report(1, pass,
           "background exactness: max|R+6| = " + fmt_sci(worstR) +
               ", max Ricci dev = " + fmt_sci(worstRic) +
               ", max |m_H - m| = " + fmt_sci(worstMh));
    EXPECT_TRUE(pass);
}

TEST(Acceptance, Criterion02_CoordinateMaps) {
    double worstRT = 0, worstSeries = 0;
    for (double m : {0.5, 1.0, 2.5}) {
        BackgroundModel bg(m);
        for (int i = 0; i < 50; ++i) {
            const double r = bg.horizon() + std::pow(10.0, -3.0 + 6.0 * i / 49.0);
            worstRT = std::max(worstRT, std::fabs(bg.r_of_s(bg.s_of_r(r)) / r - 1.0));
        }
        for (double s : {0.01, 0.02, 0.03, 0.04, 0.05})
            worstSeries = std::max(worstSeries,
                                   std::fabs(bg.series_r_of_s(s) - rk4_r_of_s(bg, s)));
    }
    const bool pass = worstRT <= 1e-9 && worstSeries <= 1e-6;
    report(2, pass,
           "coordinate maps: round-trip rel dev = " + fmt_sci(worstRT) +
               ", series vs RK4 oracle = " + fmt_sci(worstSeries));
    EXPECT_TRUE(pass);
}

TEST(Acceptance, Criterion03_LinearizationOracle) {
    auto& S = shared();
    const auto g = S.gm_metric();
    const auto cache = MetricNodeCache::build(*S.grid, g);
    const double s = 1.5, t = 1e-5;
    const double r = S.bg->r_of_s(s);
    double worst = 0;
    for (int l = 1; l <= 5; ++l)
        for (int m : {0, std::min(l, 1), l}) {
            VectorXd v = VectorXd::Zero(S.grid->ncoef());
            v[sh_index(l, m)] = 1.0;
            GraphSurface sp{s, t * v}, sm{s, -t * v};
            const auto gp = compute_geometry(g, *S.grid, cache, sp, false);
            const auto gm2 = compute_geometry(g, *S.grid, cache, sm, false);
            const VectorXd fd = (gp.H - gm2.H) / (2.0 * t);
            const VectorXd vv = S.grid->synthesize(v);
            const double lam = -S.bg->jacobi_spectrum(r, l);
            worst = std::max(worst, (fd - lam * vv).cwiseAbs().maxCoeff() /
                                        (std::fabs(lam) * vv.cwiseAbs().maxCoeff()));
        }
    const bool pass = worst <= 1e-4;
    report(3, pass, "linearization matches -L_s diagonal, worst rel dev = " +
                        fmt_sci(worst));
    EXPECT_TRUE(pass);
}

TEST(Acceptance, Criterion04_GaussEquationStack) {
    auto& S = shared();
    double res[3] = {0, 0, 0};
    double res_bg = 0;
    const int Ls[3] = {10, 15, 20};
    for (int i = 0; i < 3; ++i) {
        auto grid = make_grid(Ls[i]);
        const auto g = S.sphere_metric();
        const auto cache = MetricNodeCache::build(*grid, g);
        // coordinate sphere of the background
        if (Ls[i] == 15) {
            const auto g0 = S.gm_metric();
            const auto cache0 = MetricNodeCache::build(*grid, g0);
            GraphSurface surf{1.5, VectorXd::Zero(grid->ncoef())};
            const auto sg = compute_geometry(g0, *grid, cache0, surf, true);
            res_bg = gauss_equation_residual(*grid, sg).cwiseAbs().maxCoeff();
        }
        // solved perturbed leaf
        const auto sol = solve_free_cmc(g, *grid, cache, 1.5,
                                        VectorXd::Zero(grid->ncoef()));
        const auto sg = compute_geometry(g, *grid, cache, sol.surface, true);
        res[i] = gauss_equation_residual(*grid, sg).cwiseAbs().maxCoeff();
    }
    const bool small = res_bg <= 1e-6 && res[0] <= 1e-6 && res[1] <= 1e-6 &&
                       res[2] <= 1e-6;
    // non-increasing under refinement up to the roundoff floor
    const bool decreasing =
        (res[1] <= res[0] + 1e-8) && (res[2] <= res[1] + 1e-8);
    const bool pass = small && decreasing;
    report(4, pass,
           "Gauss residual: sphere = " + fmt_sci(res_bg) + ", leaf L10/15/20 = " +
               fmt_sci(res[0]) + " / " + fmt_sci(res[1]) + " / " + fmt_sci(res[2]));
    EXPECT_TRUE(pass);
}

TEST(Acceptance, Criterion05_SolverContract) {
    auto& S = shared();
    const auto g = S.sphere_metric();
    const auto cache = MetricNodeCache::build(*S.grid, g);
    SolveSettings st;  // tol 1e-10, max_iter 12
    bool all_converged = true;
    int max_iters = 0;
    std::vector<double> orders;
    for (int k = 0; k <= 80; ++k) {
        const double s = 0.1 * k;
        try {
            const auto sol = solve_free_cmc(g, *S.grid, cache, s,
                                            VectorXd::Zero(S.grid->ncoef()), st);
            max_iters = std::max(max_iters, int(sol.residual_history.size()) - 1);
            const double p = tail_order(sol.residual_history);
            if (!std::isnan(p)) orders.push_back(p);
        } catch (const SolverDivergence&) {
            all_converged = false;
        }
    }
    // dedicated contraction-order probe with at least three residuals above
    // the spectral floor
    {
        PerturbationSpec sp;
        sp.family = FamilyTag::sphere;
        sp.epsilon = 0.15;
        PerturbedMetric gb(S.bg, sp);
        const auto cb = MetricNodeCache::build(*S.grid, gb);
        SolveSettings stt;
        stt.tol = 1e-11;
        const auto sol = solve_free_cmc(gb, *S.grid, cb, 1.2,
                                        VectorXd::Zero(S.grid->ncoef()), stt);
        const double p = tail_order(sol.residual_history);
        if (!std::isnan(p)) orders.push_back(p);
    }
    double min_order = std::numeric_limits<double>::infinity();
    for (double p : orders) min_order = std::min(min_order, p);
    const bool pass =
        all_converged && max_iters <= 12 && !orders.empty() && min_order >= 1.8;
    report(5, pass,
           "free solve from 0 at 81 radii: converged = " +
               std::string(all_converged ? "yes" : "no") +
               ", max iterations = " + std::to_string(max_iters) +
               ", fitted order >= " + fmt_sci(min_order));
    EXPECT_TRUE(pass);
}

TEST(Acceptance, Criterion06_Stability) {
    auto& S = shared();
    const auto g0 = S.gm_metric();
    const auto cache0 = MetricNodeCache::build(*S.grid, g0);
    double worst_rel = 0;
    for (double r : {1.0, 1.5, 3.0, 6.0}) {
        const double s = (r == 1.0) ? 0.0 : S.bg->s_of_r(r);
        GraphSurface surf{s, VectorXd::Zero(S.grid->ncoef())};
        const double eig = stability_eigenvalue(g0, *S.grid, cache0, surf);
        worst_rel = std::max(worst_rel, std::fabs(eig * r * r * r / 6.0 - 1.0));
    }
    const auto& rep = S.sphere_foliation();
    double min_eig = std::numeric_limits<double>::infinity();
    for (const auto& lr : rep.leaves) min_eig = std::min(min_eig, lr.stability_eig);
    // truncated-basis eigenvalues used per leaf agree with the full basis
    const auto g = S.sphere_metric();
    const auto cache = MetricNodeCache::build(*S.grid, g);
    double worst_trunc = 0;
    for (size_t k : {size_t(5), size_t(20), size_t(40)}) {
        GraphSurface surf{rep.leaves[k].s_base, rep.u_coeffs[k]};
        const double full = stability_eigenvalue(g, *S.grid, cache, surf, -1);
        worst_trunc = std::max(worst_trunc,
                               std::fabs(full - rep.leaves[k].stability_eig));
    }
    const bool pass = worst_rel <= 1e-6 && min_eig >= -1e-9 && worst_trunc <= 1e-10;
    report(6, pass,
           "stability: background 6m/r^3 rel dev = " + fmt_sci(worst_rel) +
               ", min leaf eig = " + fmt_sci(min_eig) +
               ", truncation dev = " + fmt_sci(worst_trunc));
    EXPECT_TRUE(pass);
}

TEST(Acceptance, Criterion07_Matching) {
    auto& S = shared();
    const auto g = S.sphere_metric();
    const auto& rep = S.sphere_foliation();
    const auto mr =
        matching_check(g, *S.grid, rep, {3.8, 3.9, 4.0, 4.1, 4.2});
    const bool pass = mr.max_distance <= 1e-8;
    report(7, pass, "free/prescribed matching near s = 4: sup distance = " +
                        fmt_sci(mr.max_distance));
    EXPECT_TRUE(pass);
}

TEST(Acceptance, Criterion08_MonotonicityAndPenrose) {
    auto& S = shared();
    // the documented R >= -6 family
    const auto& rep = S.conformal_foliation();
    const auto mono = monotonicity_report(*S.grid, rep);
    const auto ml = mass_limit_estimate(*S.bg, rep);
    const auto pv = penrose_report(rep, ml);
    bool pass = rep.flags.scalar_ok() && mono.monotone_ok && ml.available &&
                std::fabs(ml.m_inf - 1.0) <= 1e-4 && pv.inequality_ok;

    // equality case: g_m in both variants
    double worst_eq = 0;
    for (Variant v : {Variant::minimal, Variant::h2}) {
        const auto g0 = S.gm_metric();
        FoliationSettings fs;
        fs.ds = 0.1;
        fs.s_max = 8.0;
        fs.variant = v;
        const auto r0 = foliate(g0, *S.grid, fs);
        const auto ml0 = mass_limit_estimate(*S.bg, r0);
        const auto pv0 = penrose_report(r0, ml0);
        worst_eq = std::max(worst_eq, std::fabs(pv0.lhs - 1.0));
    }
    pass = pass && worst_eq <= 1e-10;
    report(8, pass,
           "monotonicity + Penrose: min delta m_H = " + fmt_sci(mono.min_delta_mH) +
               ", |m_inf - m| = " + fmt_sci(std::fabs(ml.m_inf - 1.0)) +
               ", lhs <= m_inf + 1e-6: " + (pv.inequality_ok ? "yes" : "no") +
               ", equality-case dev = " + fmt_sci(worst_eq));
    EXPECT_TRUE(pass);
}

TEST(Acceptance, Criterion09_FirstVariationRichardson) {
    auto& S = shared();
    const auto g = S.conformal_metric();
    FoliationSettings c, f;
    c.ds = 0.1;
    c.s_max = 3.0;
    f.ds = 0.05;
    f.s_max = 3.0;
    const auto rc = foliate(g, *S.grid, c);
    const auto rf = foliate(g, *S.grid, f);
    const auto mc = monotonicity_report(*S.grid, rc);
    const auto mf = monotonicity_report(*S.grid, rf);
    std::vector<double> ratios;
    for (size_t i = 0; i < mc.s_values.size(); ++i)
        for (size_t j = 0; j < mf.s_values.size(); ++j)
            if (std::fabs(mc.s_values[i] - mf.s_values[j]) < 1e-12 &&
                std::fabs(mc.fv_resid[i]) > 1e-12)
                ratios.push_back(std::fabs(mc.fv_resid[i] / mf.fv_resid[j]));
    std::sort(ratios.begin(), ratios.end());
    const double median = ratios.empty() ? 0.0 : ratios[ratios.size() / 2];
    const bool pass = ratios.size() >= 5 && median >= 3.0 && median <= 5.0;
    report(9, pass,
           "first-variation Richardson: median error ratio (ds halved) = " +
               fmt_sci(median) + " over " + std::to_string(ratios.size()) +
               " leaves");
    EXPECT_TRUE(pass);
}

TEST(Acceptance, Criterion10_DecayDiagnostics) {
    auto& S = shared();
    // slopes from the angular family
    const auto dsl = decay_diagnostics(*S.bg, S.sphere_foliation(), 5.0);
    const bool slopes_ok =
        !dsl.sup_w_exact && dsl.slope_sup_w <= -0.5 &&
        (dsl.ds_tan_exact || std::isnan(dsl.slope_ds_tan) || dsl.slope_ds_tan <= -1.5) &&
        (dsl.ring_A_exact || std::isnan(dsl.slope_ring_A) || dsl.slope_ring_A <= -3.5);
    // scaled Gauss-expansion residual boundedness from the coherent radial
    // family, where the |Sigma| e^{-4s} scaling is the leading structure
    const auto dcl = decay_diagnostics(*S.bg, S.conformal_foliation(), 5.0);
    const double ratio =
        dcl.lemma_scaled_min > 0 ? dcl.lemma_scaled_max / dcl.lemma_scaled_min : 1e300;
    const bool pass = slopes_ok && ratio <= 10.0;
    report(10, pass,
           "decay: slopes (w, dsT, ringA) = " + fmt_sci(dsl.slope_sup_w) + ", " +
               fmt_sci(dsl.slope_ds_tan) + ", " + fmt_sci(dsl.slope_ring_A) +
               "; scaled identity-residual max/min = " + fmt_sci(ratio));
    EXPECT_TRUE(pass);
}

TEST(Acceptance, Criterion11_NegativeControls) {
    auto& S = shared();
    bool boundary_rejected = false;
    try {
        PerturbationSpec sp;
        sp.family = FamilyTag::nonminimal;
        sp.epsilon = 1e-3;
        PerturbedMetric g(S.bg, sp);
        FoliationSettings fs;
        fs.s_max = 3.0;
        foliate(g, *S.grid, fs);
    } catch (const GeometryError& e) {
        boundary_rejected =
            std::string(e.what()).find("boundary not minimal") != std::string::npos;
    }
    bool resonance_raised = false;
    try {
        const auto g = S.gm_metric();
        const auto cache = MetricNodeCache::build(*S.grid, g);
        solve_prescribed_cmc(g, *S.grid, cache, S.bg->s_of_r(3.0));
    } catch (const ResonanceError&) {
        resonance_raised = true;
    }
    const bool pass = boundary_rejected && resonance_raised;
    report(11, pass,
           std::string("negative controls: nonminimal boundary rejected = ") +
               (boundary_rejected ? "yes" : "no") +
               ", r = 3m resonance raised = " + (resonance_raised ? "yes" : "no"));
    EXPECT_TRUE(pass);
}
