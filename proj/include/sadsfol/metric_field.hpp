// metric_field.hpp
// Perturbed ambient metrics g = g_m + eps h on [-s_collar, inf) x S^2 with
// analytic derivatives, Christoffel symbols and curvature from the coordinate
// formulas, the e^{4s}-weighted decay distance d(g, g_m), and the membership
// diagnostics (boundary minimality, SPD probe).
//
// Built-in families are block diagonal, g = a(s,x) ds^2 + b(s,x) g_0, with
// closed-form radial profiles:
//   gm          a = 1, b = r(s)^2                          (the background)
//   sphere      b = r^2 (1 + eps w(s) Y_{l,m}(x)),  w = s^2 e^{-4|s|}/(1+s^2)
//   lapse       a = 1 + eps w(s) Y_{l,m}(x)
//   nonminimal  b = r^2 (1 + eps s e^{-5|s|})             (negative control:
//               the boundary fails to be minimal)
//   conformal   pullback of (1 + eps psi)^4 g_m, psi = -mu e^{-4s}, under the
//               radial shift sigma(s) = s + s* e^{-4s} placing the minimal
//               sphere of the conformal metric at s = 0. This is the
//               documented family with scalar curvature > -6 pointwise:
//               R + 6 = phi^{-5}(eps mu (104 - 64 r'/r) e^{-4 sigma} + O(eps^2)),
//               and 104 - 64 r'/r >= 104 - 64 sqrt(1 + 1/(27 m^2)) > 0 for
//               m >~ 0.16.

#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <limits>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "background.hpp"
#include "errors.hpp"
#include "sphere_harmonics.hpp"

namespace sadsfol {

enum class FamilyTag { gm, sphere, conformal, lapse, nonminimal };

inline FamilyTag family_from_string(const std::string& s) {
    if (s == "gm") return FamilyTag::gm;
    if (s == "sphere") return FamilyTag::sphere;
    if (s == "conformal") return FamilyTag::conformal;
    if (s == "lapse") return FamilyTag::lapse;
    if (s == "nonminimal") return FamilyTag::nonminimal;
    throw ConfigError("unknown perturbation family: " + s);
}

inline std::string family_to_string(FamilyTag t) {
    switch (t) {
        case FamilyTag::gm: return "gm";
        case FamilyTag::sphere: return "sphere";
        case FamilyTag::conformal: return "conformal";
        case FamilyTag::lapse: return "lapse";
        case FamilyTag::nonminimal: return "nonminimal";
    }
    return "?";
}

struct PerturbationSpec {
    FamilyTag family = FamilyTag::gm;
    double epsilon = 0.0;
    int b_l = 2, b_m = 0;  // angular factor of the sphere-block families
    int a_l = 0, a_m = 0;  // angular factor of the lapse family (0,0 = radial)
    double mu = 1.0;       // conformal amplitude
};

// Value and s-derivatives to third order of a radial profile.
struct RadialJet {
    double v = 0, d1 = 0, d2 = 0, d3 = 0;
};

namespace detail {

// w(s) = s^2 e^{-4|s|} / (1 + s^2): w(0) = w'(0) = 0 and e^{4s} w bounded,
// so the family stays inside the finite-decay class. Even C^2 extension
// through s = 0.
inline RadialJet profile_s2_exp(double s) {
    const double a = std::fabs(s);
    const double E = std::exp(-4.0 * a);
    const double sg = (s < 0.0) ? -1.0 : 1.0;
    const double E1 = -4.0 * sg * E, E2 = 16.0 * E, E3 = -64.0 * sg * E;
    const double d = 1.0 + s * s;
    const double f = s * s / d;
    const double f1 = 2.0 * s / (d * d);
    const double f2 = (2.0 - 6.0 * s * s) / (d * d * d);
    const double f3 = (24.0 * s * s * s - 24.0 * s) / (d * d * d * d);
    RadialJet j;
    j.v = f * E;
    j.d1 = f1 * E + f * E1;
    j.d2 = f2 * E + 2.0 * f1 * E1 + f * E2;
    j.d3 = f3 * E + 3.0 * f2 * E1 + 3.0 * f1 * E2 + f * E3;
    return j;
}

// w(s) = s e^{-5|s|}; w'(0) = 1 breaks boundary minimality by design.
inline RadialJet profile_s_exp(double s) {
    const double a = std::fabs(s);
    const double E = std::exp(-5.0 * a);
    const double sg = (s < 0.0) ? -1.0 : 1.0;
    RadialJet j;
    j.v = s * E;
    j.d1 = (1.0 - 5.0 * a) * E;
    j.d2 = sg * (-10.0 + 25.0 * a) * E;
    j.d3 = (75.0 - 125.0 * a) * E;
    return j;
}

inline RadialJet r_squared_jet(const BackgroundModel& bg, double s) {
    double r, r1, r2, r3;
    bg.r_jets(s, r, r1, r2, r3);
    RadialJet j;
    j.v = r * r;
    j.d1 = 2.0 * r * r1;
    j.d2 = 2.0 * (r1 * r1 + r * r2);
    j.d3 = 2.0 * (3.0 * r1 * r2 + r * r3);
    return j;
}

}  // namespace detail

// Full 3-metric component jets in coordinates (x0, x1, x2) = (s, theta, phi).
struct MetricJets {
    Eigen::Matrix3d g;
    double dg[3][3][3];       // dg[c][a][b] = d_c g_ab
    double d2g[3][3][3][3];   // d2g[c][d][a][b]
};

struct CurvatureAt {
    Eigen::Matrix3d ric;
    double scalar;
};

// Christoffel symbols Gamma[a][b][c] = Gamma^a_{bc} from metric jets.
inline void christoffel(const MetricJets& mj, double Gamma[3][3][3]) {
    const Eigen::Matrix3d inv = mj.g.inverse();
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
            for (int c = 0; c < 3; ++c) {
                double acc = 0.0;
                for (int d = 0; d < 3; ++d)
                    acc += inv(a, d) *
                           (mj.dg[b][d][c] + mj.dg[c][b][d] - mj.dg[d][b][c]);
                Gamma[a][b][c] = 0.5 * acc;
            }
}

// Ricci tensor and scalar curvature from metric jets (coordinate formula).
inline CurvatureAt curvature_from_jets(const MetricJets& mj) {
    const Eigen::Matrix3d inv = mj.g.inverse();
    double Gamma[3][3][3];
    christoffel(mj, Gamma);

    // dInv[e] = -inv dg[e] inv
    Eigen::Matrix3d dInv[3];
    for (int e = 0; e < 3; ++e) {
        Eigen::Matrix3d dgm;
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) dgm(a, b) = mj.dg[e][a][b];
        dInv[e] = -inv * dgm * inv;
    }

    // dGamma[e][a][b][c] = d_e Gamma^a_{bc}
    static thread_local double dGamma[3][3][3][3];
    for (int e = 0; e < 3; ++e)
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b)
                for (int c = 0; c < 3; ++c) {
                    double acc = 0.0;
                    for (int d = 0; d < 3; ++d) {
                        acc += dInv[e](a, d) *
                               (mj.dg[b][d][c] + mj.dg[c][b][d] - mj.dg[d][b][c]);
                        acc += inv(a, d) * (mj.d2g[e][b][d][c] + mj.d2g[e][c][b][d] -
                                            mj.d2g[e][d][b][c]);
                    }
                    dGamma[e][a][b][c] = 0.5 * acc;
                }

    CurvatureAt out;
    for (int b = 0; b < 3; ++b)
        for (int c = 0; c < 3; ++c) {
            double acc = 0.0;
            for (int a = 0; a < 3; ++a) {
                acc += dGamma[a][a][b][c] - dGamma[b][a][a][c];
                for (int e = 0; e < 3; ++e)
                    acc += Gamma[a][a][e] * Gamma[e][b][c] -
                           Gamma[a][b][e] * Gamma[e][a][c];
            }
            out.ric(b, c) = acc;
        }
    out.ric = 0.5 * (out.ric + out.ric.transpose()).eval();
    out.scalar = (inv * out.ric).trace();
    return out;
}

class PerturbedMetric {
  public:
    PerturbedMetric(std::shared_ptr<const BackgroundModel> bg, PerturbationSpec spec,
                    double s_collar = 0.2)
        : bg_(std::move(bg)), spec_(spec), collar_(s_collar) {
        if (spec_.family == FamilyTag::conformal && spec_.epsilon != 0.0)
            solve_conformal_shift();
        spd_probe();
    }

    const BackgroundModel& background() const { return *bg_; }
    std::shared_ptr<const BackgroundModel> background_ptr() const { return bg_; }
    const PerturbationSpec& spec() const { return spec_; }
    double collar() const { return collar_; }
    double conformal_shift() const { return conf_shift_; }

    bool is_radial() const {
        switch (spec_.family) {
            case FamilyTag::gm:
            case FamilyTag::conformal:
            case FamilyTag::nonminimal: return true;
            case FamilyTag::sphere: return spec_.epsilon == 0.0;
            case FamilyTag::lapse:
                return spec_.epsilon == 0.0 || (spec_.a_l == 0 && spec_.a_m == 0);
        }
        return false;
    }

    // Angular factor of the family at a point (value + derivatives); the
    // factor is fixed on S^2 so callers cache it per grid node.
    AngularJet angular_factor(double theta, double phi) const {
        switch (spec_.family) {
            case FamilyTag::sphere: return real_harmonic_jet(spec_.b_l, spec_.b_m, theta, phi);
            case FamilyTag::lapse: {
                if (spec_.a_l == 0 && spec_.a_m == 0) {
                    AngularJet one;
                    one.v = 1.0;
                    return one;
                }
                return real_harmonic_jet(spec_.a_l, spec_.a_m, theta, phi);
            }
            default: {
                AngularJet z;
                return z;
            }
        }
    }

    // Radial block profiles: g = a ds^2 + b g_0. h-jets are the deviations
    // from the background (a - 1, b - r^2) with the angular factor split off:
    //   sphere / nonminimal:  b = r^2 + [hb] * B(x)
    //   lapse:                a = 1 + [ha] * A(x)
    //   conformal (radial):   a = 1 + [ha], b = r^2 + [hb]
    struct RadialParts {
        RadialJet ha, hb;  // deviations (angular factor not included)
    };

    RadialParts radial_parts(double s) const {
        check_domain(s);
        RadialParts p;
        switch (spec_.family) {
            case FamilyTag::gm: break;
            case FamilyTag::sphere: {
                const RadialJet w = detail::profile_s2_exp(s);
                const RadialJet r2 = detail::r_squared_jet(*bg_, s);
                p.hb = scale(product(r2, w), spec_.epsilon);
                break;
            }
            case FamilyTag::nonminimal: {
                const RadialJet w = detail::profile_s_exp(s);
                const RadialJet r2 = detail::r_squared_jet(*bg_, s);
                p.hb = scale(product(r2, w), spec_.epsilon);
                break;
            }
            case FamilyTag::lapse: {
                p.ha = scale(detail::profile_s2_exp(s), spec_.epsilon);
                break;
            }
            case FamilyTag::conformal: {
                p = conformal_parts(s);
                break;
            }
        }
        return p;
    }

    // Assembled component jets at a point; angular factor evaluated fresh.
    MetricJets metric_at(double s, double theta, double phi) const {
        return metric_with_angular(s, theta, angular_factor(theta, phi));
    }

    // Assembled component jets reusing a cached angular factor (grids).
    MetricJets metric_with_angular(double s, double theta, const AngularJet& ang) const {
        const RadialParts p = radial_parts(s);
        const RadialJet r2 = detail::r_squared_jet(*bg_, s);

        // scalar jets of a(s, x) and b(s, x) wrt (s, theta, phi), order 2
        auto mix = [](const RadialJet& rad, const AngularJet& an, double base_v,
                      double out[3][4]) {
            // out rows: [v, ds, dtheta, dphi] x [., ds, dtheta, dphi] packed as
            // out[0] = {v, s, t, p}; out[1] = {ss, st, sp, -}; out[2] = {tt, tp, pp, -}
            out[0][0] = base_v + rad.v * an.v;
            out[0][1] = rad.d1 * an.v;
            out[0][2] = rad.v * an.t;
            out[0][3] = rad.v * an.p;
            out[1][0] = rad.d2 * an.v;
            out[1][1] = rad.d1 * an.t;
            out[1][2] = rad.d1 * an.p;
            out[1][3] = 0.0;
            out[2][0] = rad.v * an.tt;
            out[2][1] = rad.v * an.tp;
            out[2][2] = rad.v * an.pp;
            out[2][3] = 0.0;
        };

        AngularJet one;
        one.v = 1.0;
        const bool radial = is_radial();
        const AngularJet& bfac =
            (spec_.family == FamilyTag::sphere && !radial) ? ang : one;
        const AngularJet& afac =
            (spec_.family == FamilyTag::lapse && !radial) ? ang : one;

        double A[3][4], B[3][4];
        mix(p.ha, afac, 1.0, A);
        RadialJet bdev = p.hb;
        double Btmp[3][4];
        mix(bdev, bfac, 0.0, Btmp);
        // add background r^2 (radial only)
        B[0][0] = r2.v + Btmp[0][0];
        B[0][1] = r2.d1 + Btmp[0][1];
        B[0][2] = Btmp[0][2];
        B[0][3] = Btmp[0][3];
        B[1][0] = r2.d2 + Btmp[1][0];
        B[1][1] = Btmp[1][1];
        B[1][2] = Btmp[1][2];
        B[1][3] = 0.0;
        B[2][0] = Btmp[2][0];
        B[2][1] = Btmp[2][1];
        B[2][2] = Btmp[2][2];
        B[2][3] = 0.0;

        return assemble(theta, A, B);
    }

    CurvatureAt curvature(double s, double theta, double phi) const {
        return curvature_from_jets(metric_at(s, theta, phi));
    }

    double scalar_curvature(double s, double theta, double phi) const {
        return curvature(s, theta, phi).scalar;
    }

    // sup |H| over the boundary sphere, from the closed form for block
    // metrics: H(S_0) = b'(0,x) / (b sqrt(a)). Cross-checked against the
    // graph-geometry mean curvature in the tests.
    double boundary_minimality_check(int nsamp = 16) const {
        double sup = 0.0;
        for (int i = 0; i < nsamp; ++i)
            for (int j = 0; j < nsamp; ++j) {
                const double th = M_PI * (i + 0.5) / nsamp;
                const double ph = 2.0 * M_PI * j / nsamp;
                const auto mj = metric_at(0.0, th, ph);
                const double b = mj.g(1, 1), bp = mj.dg[0][1][1], a = mj.g(0, 0);
                sup = std::max(sup, std::fabs(bp / (b * std::sqrt(a))));
            }
        return sup;
    }

    // d(g, g_m): sup over a dense sample grid of
    //   sum_{i=0..3} e^{4s} || (nabla_m)^i (g - g_m) ||_{g_m}.
    double decay_distance(double s_max = 20.0, double ds = 0.1, int nang = 6) const;

    // min(R + 6) over a deterministic probe grid of M (hypothesis flag input).
    // Colatitudes are kept a hair away from the poles: the coordinate
    // curvature formula loses ~cot^2(theta) digits there while the built-in
    // angular factors vary smoothly, so nothing is missed.
    double min_scalar_excess(double s_max, unsigned seed, int nprobe = 400) const {
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> U(0.0, 1.0);
        double mn = std::numeric_limits<double>::infinity();
        for (int i = 0; i < nprobe; ++i) {
            const double s = s_max * U(rng) * U(rng);  // biased toward the boundary
            double th = std::acos(1.0 - 2.0 * U(rng));
            th = std::clamp(th, 0.05, M_PI - 0.05);
            const double ph = 2.0 * M_PI * U(rng);
            mn = std::min(mn, scalar_curvature(s, th, ph) + 6.0);
        }
        return mn;
    }

  private:
    static RadialJet product(const RadialJet& x, const RadialJet& y) {
        RadialJet j;
        j.v = x.v * y.v;
        j.d1 = x.d1 * y.v + x.v * y.d1;
        j.d2 = x.d2 * y.v + 2.0 * x.d1 * y.d1 + x.v * y.d2;
        j.d3 = x.d3 * y.v + 3.0 * x.d2 * y.d1 + 3.0 * x.d1 * y.d2 + x.v * y.d3;
        return j;
    }
    static RadialJet scale(RadialJet x, double c) {
        x.v *= c;
        x.d1 *= c;
        x.d2 *= c;
        x.d3 *= c;
        return x;
    }

    void check_domain(double s) const {
        if (s < -collar_ - 1e-12)
            throw GeometryError("metric evaluated below the collar extension");
    }

    // conformal family: phi(t) = 1 - eps mu e^{-4t}, sigma(s) = s + s* e^{-4s}
    void solve_conformal_shift() {
        const double em = spec_.epsilon * spec_.mu;
        if (em < 0.0)
            throw ConfigError("conformal family requires eps * mu >= 0");
        auto Hc = [this, em](double s) {
            double r, r1, r2, r3;
            bg_->r_jets(s, r, r1, r2, r3);
            const double H = 2.0 * r1 / r;
            const double phi = 1.0 - em * std::exp(-4.0 * s);
            const double dphi = 4.0 * em * std::exp(-4.0 * s);
            return H / (phi * phi) + 4.0 * dphi / (phi * phi * phi);
        };
        double lo = -0.15, hi = 0.02;
        if (!(Hc(lo) < 0.0 && Hc(hi) > 0.0))
            throw ConfigError("conformal family: minimal-sphere bracket failed (eps too large)");
        for (int it = 0; it < 200 && hi - lo > 1e-16; ++it) {
            const double mid = 0.5 * (lo + hi);
            (Hc(mid) > 0.0 ? hi : lo) = mid;
        }
        conf_shift_ = 0.5 * (lo + hi);
        if (conf_shift_ < -collar_ + 0.02)
            throw ConfigError("conformal family: shifted horizon leaves the collar");
    }

    RadialParts conformal_parts(double s) const {
        const double em = spec_.epsilon * spec_.mu;
        const double sstar = conf_shift_;
        // sigma and derivatives
        const double E = std::exp(-4.0 * s);
        const double sig = s + sstar * E;
        const double q1 = 1.0 - 4.0 * sstar * E;
        const double q2 = 16.0 * sstar * E;
        const double q3 = -64.0 * sstar * E;
        const double q4 = 256.0 * sstar * E;
        // phi(sigma) and tau-derivatives
        const double Es = std::exp(-4.0 * sig);
        const double P0 = 1.0 - em * Es;
        const double Pt1 = 4.0 * em * Es;
        const double Pt2 = -16.0 * em * Es;
        const double Pt3 = 64.0 * em * Es;
        // P(s) = phi(sigma(s)) by chain rule
        const double P1 = Pt1 * q1;
        const double P2 = Pt2 * q1 * q1 + Pt1 * q2;
        const double P3 = Pt3 * q1 * q1 * q1 + 3.0 * Pt2 * q1 * q2 + Pt1 * q3;
        // F = P^4
        const double F0 = P0 * P0 * P0 * P0;
        const double F1 = 4.0 * P0 * P0 * P0 * P1;
        const double F2 = 12.0 * P0 * P0 * P1 * P1 + 4.0 * P0 * P0 * P0 * P2;
        const double F3 = 24.0 * P0 * P1 * P1 * P1 + 36.0 * P0 * P0 * P1 * P2 +
                          4.0 * P0 * P0 * P0 * P3;
        // y = r(sigma)
        double r, r1, r2, r3;
        bg_->r_jets(sig, r, r1, r2, r3);
        const double y0 = r;
        const double y1 = r1 * q1;
        const double y2 = r2 * q1 * q1 + r1 * q2;
        const double y3 = r3 * q1 * q1 * q1 + 3.0 * r2 * q1 * q2 + r1 * q3;
        // R2 = y^2
        const double R20 = y0 * y0;
        const double R21 = 2.0 * y0 * y1;
        const double R22 = 2.0 * (y1 * y1 + y0 * y2);
        const double R23 = 6.0 * y1 * y2 + 2.0 * y0 * y3;
        // a = F q'^2
        RadialJet a;
        a.v = F0 * q1 * q1;
        a.d1 = F1 * q1 * q1 + 2.0 * F0 * q1 * q2;
        a.d2 = F2 * q1 * q1 + 4.0 * F1 * q1 * q2 + 2.0 * F0 * (q2 * q2 + q1 * q3);
        a.d3 = F3 * q1 * q1 + 6.0 * F2 * q1 * q2 + 6.0 * F1 * (q2 * q2 + q1 * q3) +
               2.0 * F0 * (3.0 * q2 * q3 + q1 * q4);
        // b = F R2
        RadialJet b;
        b.v = F0 * R20;
        b.d1 = F1 * R20 + F0 * R21;
        b.d2 = F2 * R20 + 2.0 * F1 * R21 + F0 * R22;
        b.d3 = F3 * R20 + 3.0 * F2 * R21 + 3.0 * F1 * R22 + F0 * R23;

        const RadialJet bg_r2 = detail::r_squared_jet(*bg_, s);
        RadialParts p;
        p.ha = {a.v - 1.0, a.d1, a.d2, a.d3};
        p.hb = {b.v - bg_r2.v, b.d1 - bg_r2.d1, b.d2 - bg_r2.d2, b.d3 - bg_r2.d3};
        return p;
    }

    // Assemble component jets from scalar jets of a and b (order-2 packing
    // described in metric_with_angular).
    MetricJets assemble(double theta, const double A[3][4], const double B[3][4]) const {
        MetricJets mj;
        mj.g.setZero();
        for (auto& pl : mj.dg)
            for (auto& row : pl)
                for (double& x : row) x = 0.0;
        for (auto& p4 : mj.d2g)
            for (auto& pl : p4)
                for (auto& row : pl)
                    for (double& x : row) x = 0.0;

        const double st = std::sin(theta), ct = std::cos(theta);
        const double s2 = st * st, s2p = 2.0 * st * ct, s2pp = 2.0 * (ct * ct - st * st);

        // g_00 = a
        mj.g(0, 0) = A[0][0];
        // g_11 = b ; g_22 = b sin^2
        mj.g(1, 1) = B[0][0];
        mj.g(2, 2) = B[0][0] * s2;

        const int S = 0, T = 1, P = 2;
        auto da = [&](int c) { return A[0][c + 1]; };
        auto db = [&](int c) { return B[0][c + 1]; };
        // second partials lookup for the packed layout
        auto d2 = [&](const double X[3][4], int c, int d) -> double {
            if (c > d) std::swap(c, d);
            if (c == S) return X[1][d];        // (s,s)=X[1][0], (s,t)=X[1][1], (s,p)=X[1][2]
            return X[2][c - 1 + d - 1];        // (t,t)=X[2][0], (t,p)=X[2][1], (p,p)=X[2][2]
        };

        for (int c = 0; c < 3; ++c) {
            mj.dg[c][0][0] = da(c);
            mj.dg[c][1][1] = db(c);
            mj.dg[c][2][2] = db(c) * s2;
        }
        mj.dg[T][2][2] += B[0][0] * s2p;

        for (int c = 0; c < 3; ++c)
            for (int d = 0; d < 3; ++d) {
                mj.d2g[c][d][0][0] = d2(A, c, d);
                mj.d2g[c][d][1][1] = d2(B, c, d);
                mj.d2g[c][d][2][2] = d2(B, c, d) * s2;
            }
        for (int c = 0; c < 3; ++c) {
            mj.d2g[c][T][2][2] += db(c) * s2p;
            mj.d2g[T][c][2][2] += db(c) * s2p;
        }
        mj.d2g[T][T][2][2] += B[0][0] * s2pp;
        return mj;
    }

    void spd_probe() const {
        for (double s : {-collar_, -0.5 * collar_, 0.0, 0.3, 1.0, 2.0, 5.0, 9.0})
            for (double th : {0.4, 1.2, 2.2})
                for (double ph : {0.3, 2.9}) {
                    const auto mj = metric_at(s, th, ph);
                    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(mj.g);
                    if (es.eigenvalues().minCoeff() <= 0.0)
                        throw DegeneracyError("perturbed metric not positive definite at probe point");
                }
    }

    std::shared_ptr<const BackgroundModel> bg_;
    PerturbationSpec spec_;
    double collar_;
    double conf_shift_ = 0.0;
};

// ---------------------------------------------------------------------------
// Decay distance: covariant derivatives of h = g - g_m with respect to the
// background connection, up to third order, from analytic component jets.

namespace detail {

// Background Christoffels and their first/second partials wrt (s, theta).
struct GammaJets {
    double G[3][3][3] = {};
    double dG[3][3][3][3] = {};
    double d2G[3][3][3][3][3] = {};
};

inline GammaJets background_gamma_jets(const BackgroundModel& bg, double s, double theta) {
    GammaJets gj;
    double r, r1, r2, r3;
    bg.r_jets(s, r, r1, r2, r3);
    const double st = std::sin(theta), ct = std::cos(theta);
    const double s2 = st * st;
    const double sin2 = 2.0 * st * ct;        // d(sin^2)/dtheta
    const double cos2 = ct * ct - st * st;    // cos(2 theta)

    const double rr1 = r * r1;                          // r r'
    const double rr1_s = r1 * r1 + r * r2;              // d/ds
    const double rr1_ss = 3.0 * r1 * r2 + r * r3;       // d2/ds2
    const double c1 = r1 / r;                           // r'/r
    const double c1_s = r2 / r - c1 * c1;
    const double c1_ss = r3 / r - 3.0 * r1 * r2 / (r * r) + 2.0 * c1 * c1 * c1;

    const int S = 0, T = 1, P = 2;

    // Gamma^s_tt = -r r'
    gj.G[S][T][T] = -rr1;
    gj.dG[S][S][T][T] = -rr1_s;
    gj.d2G[S][S][S][T][T] = -rr1_ss;
    // Gamma^s_pp = -r r' sin^2
    gj.G[S][P][P] = -rr1 * s2;
    gj.dG[S][S][P][P] = -rr1_s * s2;
    gj.dG[T][S][P][P] = -rr1 * sin2;
    gj.d2G[S][S][S][P][P] = -rr1_ss * s2;
    gj.d2G[S][T][S][P][P] = gj.d2G[T][S][S][P][P] = -rr1_s * sin2;
    gj.d2G[T][T][S][P][P] = -rr1 * 2.0 * cos2;
    // Gamma^t_st = Gamma^t_ts = r'/r ; same for phi
    for (int i : {T, P}) {
        gj.G[i][S][i] = gj.G[i][i][S] = c1;
        gj.dG[S][i][S][i] = gj.dG[S][i][i][S] = c1_s;
        gj.d2G[S][S][i][S][i] = gj.d2G[S][S][i][i][S] = c1_ss;
    }
    // Gamma^t_pp = -sin cos
    gj.G[T][P][P] = -st * ct;
    gj.dG[T][T][P][P] = -cos2;
    gj.d2G[T][T][T][P][P] = 2.0 * st * ct * 2.0;  // d/dtheta(-cos 2theta) = 2 sin 2theta
    // Gamma^p_tp = Gamma^p_pt = cot
    const double cot = ct / st;
    const double cot_t = -1.0 / s2;
    const double cot_tt = 2.0 * ct / (s2 * st);
    gj.G[P][T][P] = gj.G[P][P][T] = cot;
    gj.dG[T][P][T][P] = gj.dG[T][P][P][T] = cot_t;
    gj.d2G[T][T][P][T][P] = gj.d2G[T][T][P][P][T] = cot_tt;
    return gj;
}

// Dense little tensor-with-partials stack: ranks up to 5, partial levels up
// to 3. Index packing is little-endian base 3.
struct TensorStack {
    int rank = 0;
    std::vector<double> lev0, lev1, lev2, lev3;  // levels: value, d, d2, d3

    static int size(int rank) {
        int s = 1;
        for (int i = 0; i < rank; ++i) s *= 3;
        return s;
    }
};

// One covariant-derivative step: consumes partial levels (n available ->
// n - 1 produced for the derivative tensor).
inline TensorStack covariant_step(const TensorStack& T, const GammaJets& gj, int levels) {
    const int rk = T.rank;
    const int n = TensorStack::size(rk);
    TensorStack S;
    S.rank = rk + 1;
    const int ns = TensorStack::size(rk + 1);
    S.lev0.assign(ns, 0.0);
    if (levels >= 1) S.lev1.assign(3 * ns, 0.0);
    if (levels >= 2) S.lev2.assign(9 * ns, 0.0);

    auto decode = [rk](int idx, int* a) {
        for (int j = 0; j < rk; ++j) {
            a[j] = idx % 3;
            idx /= 3;
        }
    };
    auto encode = [rk](const int* a) {
        int idx = 0;
        for (int j = rk - 1; j >= 0; --j) idx = idx * 3 + a[j];
        return idx;
    };

    int a[6];
    for (int idx = 0; idx < n; ++idx) {
        decode(idx, a);
        for (int c = 0; c < 3; ++c) {
            const int sidx = idx * 3 + c;  // new leading slot packed at the top
            // value: d_c T - sum_j Gamma^d_{c a_j} T_{a_j -> d}
            double val = T.lev1[c * n + idx];
            double dval[3] = {T.lev2.empty() ? 0.0 : T.lev2[(0 * 3 + c) * n + idx],
                              T.lev2.empty() ? 0.0 : T.lev2[(1 * 3 + c) * n + idx],
                              T.lev2.empty() ? 0.0 : T.lev2[(2 * 3 + c) * n + idx]};
            double d2val[9];
            if (levels >= 2)
                for (int e = 0; e < 3; ++e)
                    for (int f = 0; f < 3; ++f)
                        d2val[e * 3 + f] = T.lev3[((e * 3 + f) * 3 + c) * n + idx];

            for (int j = 0; j < rk; ++j) {
                const int aj = a[j];
                for (int d = 0; d < 3; ++d) {
                    int b[6];
                    for (int t = 0; t < rk; ++t) b[t] = a[t];
                    b[j] = d;
                    const int jdx = encode(b);
                    val -= gj.G[d][c][aj] * T.lev0[jdx];
                    if (levels >= 1)
                        for (int e = 0; e < 3; ++e)
                            dval[e] -= gj.dG[e][d][c][aj] * T.lev0[jdx] +
                                       gj.G[d][c][aj] * T.lev1[e * n + jdx];
                    if (levels >= 2)
                        for (int e = 0; e < 3; ++e)
                            for (int f = 0; f < 3; ++f)
                                d2val[e * 3 + f] -=
                                    gj.d2G[e][f][d][c][aj] * T.lev0[jdx] +
                                    gj.dG[e][d][c][aj] * T.lev1[f * n + jdx] +
                                    gj.dG[f][d][c][aj] * T.lev1[e * n + jdx] +
                                    gj.G[d][c][aj] * T.lev2[(e * 3 + f) * n + jdx];
                }
            }
            S.lev0[sidx] = val;
            if (levels >= 1)
                for (int e = 0; e < 3; ++e) S.lev1[e * ns + sidx] = dval[e];
            if (levels >= 2)
                for (int e = 0; e < 3; ++e)
                    for (int f = 0; f < 3; ++f)
                        S.lev2[(e * 3 + f) * ns + sidx] = d2val[e * 3 + f];
        }
    }
    return S;
}

// ||T||_{g_m} with the diagonal inverse metric weights.
inline double gm_norm(const TensorStack& T, double r, double theta) {
    const double wdiag[3] = {1.0, 1.0 / (r * r),
                             1.0 / (r * r * std::sin(theta) * std::sin(theta))};
    const int n = TensorStack::size(T.rank);
    double acc = 0.0;
    for (int idx = 0; idx < n; ++idx) {
        double wp = 1.0;
        int rem = idx;
        for (int j = 0; j < T.rank; ++j) {
            wp *= wdiag[rem % 3];
            rem /= 3;
        }
        acc += T.lev0[idx] * T.lev0[idx] * wp;
    }
    return std::sqrt(acc);
}

}  // namespace detail

inline double PerturbedMetric::decay_distance(double s_max, double ds, int nang) const {
    if (spec_.epsilon == 0.0 || spec_.family == FamilyTag::gm) return 0.0;
    double sup = 0.0;
    for (double s = 0.0; s <= s_max + 1e-9; s += ds) {
        for (int it = 0; it <= nang; ++it)
            for (int jp = 0; jp < nang; ++jp) {
                // near-pole endpoints included: the angular factors peak there
                const double th = 0.02 + (M_PI - 0.04) * it / nang;
                const double ph = 2.0 * M_PI * (jp + 0.5) / nang;

                // h component jets to third order
                const RadialParts p = radial_parts(s);
                const AngularJet an = angular_factor(th, ph);
                AngularJet one;
                one.v = 1.0;
                const AngularJet& bfac =
                    (spec_.family == FamilyTag::sphere) ? an : one;
                const AngularJet& afac =
                    (spec_.family == FamilyTag::lapse && !(spec_.a_l == 0 && spec_.a_m == 0))
                        ? an
                        : one;

                detail::TensorStack T;
                T.rank = 2;
                T.lev0.assign(9, 0.0);
                T.lev1.assign(27, 0.0);
                T.lev2.assign(81, 0.0);
                T.lev3.assign(243, 0.0);

                const double st = std::sin(th), ct = std::cos(th);
                const double s2 = st * st;
                const double s2d[4] = {s2, 2.0 * st * ct, 2.0 * (ct * ct - st * st),
                                       -8.0 * st * ct};

                // scalar jet of a product rad(s) * ang(theta, phi), full third order
                auto fill = [&](int comp, const RadialJet& rad, const AngularJet& aj,
                                const double* sphfac) {
                    // partial-derivative multi-indices over (s, t, p)
                    auto radd = [&](int k) {
                        return k == 0 ? rad.v : (k == 1 ? rad.d1 : (k == 2 ? rad.d2 : rad.d3));
                    };
                    auto angd = [&](int kt, int kp) -> double {
                        switch (kt * 4 + kp) {
                            case 0: return aj.v;     // (0,0)
                            case 1: return aj.p;     // (0,1)
                            case 2: return aj.pp;    // (0,2)
                            case 3: return aj.ppp;   // (0,3)
                            case 4: return aj.t;     // (1,0)
                            case 5: return aj.tp;
                            case 6: return aj.tpp;
                            case 8: return aj.tt;    // (2,0)
                            case 9: return aj.ttp;
                            case 12: return aj.ttt;  // (3,0)
                            default: return 0.0;
                        }
                    };
                    // sphfac: optional extra sin^2(theta) factor with theta-derivs
                    auto term = [&](int ks, int kt, int kp) -> double {
                        double acc = 0.0;
                        const int kt_total = kt;
                        if (!sphfac) return radd(ks) * angd(kt, kp);
                        // Leibniz in theta between ang and sin^2
                        for (int u = 0; u <= kt_total; ++u) {
                            double binom = 1.0;
                            for (int z = 0; z < u; ++z)
                                binom = binom * (kt_total - z) / (z + 1);
                            acc += binom * angd(u, kp) * sphfac[kt_total - u];
                        }
                        return radd(ks) * acc;
                    };
                    auto put = [&](int lev, int e, int f, int gidx, double val) {
                        const int a = comp / 3, b = comp % 3;
                        (void)a;
                        (void)b;
                        if (lev == 0)
                            T.lev0[comp] = val;
                        else if (lev == 1)
                            T.lev1[e * 9 + comp] = val;
                        else if (lev == 2)
                            T.lev2[(e * 3 + f) * 9 + comp] = val;
                        else
                            T.lev3[((e * 3 + f) * 3 + gidx) * 9 + comp] = val;
                    };
                    // enumerate multi-derivatives by direction tuples
                    int ks, kt, kp;
                    auto count = [&](std::initializer_list<int> dirs) {
                        ks = kt = kp = 0;
                        for (int d : dirs) {
                            if (d == 0) ++ks;
                            else if (d == 1) ++kt;
                            else ++kp;
                        }
                    };
                    count({});
                    put(0, 0, 0, 0, term(ks, kt, kp));
                    for (int e = 0; e < 3; ++e) {
                        count({e});
                        put(1, e, 0, 0, term(ks, kt, kp));
                    }
                    for (int e = 0; e < 3; ++e)
                        for (int f = 0; f < 3; ++f) {
                            count({e, f});
                            put(2, e, f, 0, term(ks, kt, kp));
                        }
                    for (int e = 0; e < 3; ++e)
                        for (int f = 0; f < 3; ++f)
                            for (int gidx = 0; gidx < 3; ++gidx) {
                                count({e, f, gidx});
                                put(3, e, f, gidx, term(ks, kt, kp));
                            }
                };

                fill(0 * 3 + 0, p.ha, afac, nullptr);       // h_ss
                fill(1 * 3 + 1, p.hb, bfac, nullptr);       // h_tt
                fill(2 * 3 + 2, p.hb, bfac, s2d);           // h_pp = hb * sin^2

                const auto gj = detail::background_gamma_jets(*bg_, s, th);
                const double r = bg_->r_of_s(s);

                double total = detail::gm_norm(T, r, th);
                detail::TensorStack cur = T;
                for (int lev = 1; lev <= 3; ++lev) {
                    cur = detail::covariant_step(cur, gj, 3 - lev);
                    total += detail::gm_norm(cur, r, th);
                }
                sup = std::max(sup, std::exp(4.0 * s) * total);
            }
    }
    return sup;
}

}  // namespace sadsfol
