// background.hpp
// Exact Schwarzschild anti-de Sitter geometry of mass m > 0 on
// M = [0, inf) x S^2:
//
//   g_m = dr^2 / rho^2(r) + r^2 g_0,   rho^2(r) = 1 + r^2 - 2m/r,
//       = ds^2 + r(s)^2 g_0            (s = distance to the horizon sphere)
//
// r0 is the unique positive root of rho^2. The s <-> r coordinate change has
// no closed form; r(s) is tabulated once per model (quintic Hermite pieces
// with exact nodal derivatives, since r' = rho(r), r'' = r + m/r^2 are closed
// forms in r) and s(r) is evaluated by quadrature with the square-root
// singularity at r0 removed by the substitution r = r0 + k tau^2 / 4.
//
// The chart extends through the doubled manifold: r(-s) = r(s), so all maps
// accept s slightly below 0 (graphs of surfaces near the boundary may dip
// below the horizon sphere).

#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace sadsfol {

// Root of r^3 + r - 2m = 0 (equivalent to rho_m^2(r0) = 0 and monotone).
inline double horizon_radius(double m) {
    if (!(m > 0.0)) throw std::domain_error("horizon_radius: m must be positive");
    double lo = 0.0, hi = std::max(1.0, 2.0 * m);
    auto f = [m](double r) { return r * r * r + r - 2.0 * m; };
    for (int it = 0; it < 200 && hi - lo > 1e-16 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (f(mid) > 0.0 ? hi : lo) = mid;
    }
    double r = 0.5 * (lo + hi);
    for (int it = 0; it < 4; ++it) r -= f(r) / (3.0 * r * r + 1.0);
    return r;
}

namespace detail {

// Quintic Hermite segment through (y, y', y'') at both ends of [0, h].
struct QuinticSeg {
    double c[6];
    void fit(double h, double y0, double d0, double s0, double y1, double d1, double s1) {
        c[0] = y0;
        c[1] = d0;
        c[2] = 0.5 * s0;
        const double h2 = h * h;
        const double A = y1 - y0 - d0 * h - 0.5 * s0 * h2;
        const double B = d1 - d0 - s0 * h;
        const double C = s1 - s0;
        // solve for c3, c4, c5
        c[3] = (10.0 * A - 4.0 * B * h + 0.5 * C * h2) / (h2 * h);
        c[4] = (-15.0 * A + 7.0 * B * h - C * h2) / (h2 * h2);
        c[5] = (6.0 * A - 3.0 * B * h + 0.5 * C * h2) / (h2 * h2 * h);
    }
    double eval(double t) const {
        return c[0] + t * (c[1] + t * (c[2] + t * (c[3] + t * (c[4] + t * c[5]))));
    }
};

}  // namespace detail

class BackgroundModel {
  public:
    explicit BackgroundModel(double mass, double series_cutoff = 0.05,
                             double table_end = 30.0)
        : m_(mass), s_series_(series_cutoff), s_table_end_(table_end) {
        if (!(mass > 0.0)) throw std::domain_error("BackgroundModel: m must be positive");
        r0_ = horizon_radius(mass);
        k_ = 2.0 * r0_ + 2.0 * m_ / (r0_ * r0_);
        const double q = 1.0 - 2.0 * m_ / (r0_ * r0_ * r0_);
        a2_ = k_ / 4.0;
        a4_ = q * k_ / 48.0;
        a6_ = q * q * k_ / 1440.0 + m_ * k_ * k_ / (160.0 * r0_ * r0_ * r0_ * r0_);
        build_tables();
        // Anchored radial coordinate st = s + c with r(st) = sinh(st)(1 + O(e^{-3 st})).
        // The distance function itself satisfies r(s)/sinh(s) -> e^{c} with a
        // nonzero constant c(m); every asymptotic expansion (v_m coefficient,
        // |Sigma| = 4 pi sinh^2(s_hat), 1/sinh^3 s weights) lives in st.
        anchor_offset_ = std::asinh(r_of_s(s_table_end_)) - s_table_end_;
    }

    // c with sinh(s + c) ~ r(s) at infinity; anchored coordinate st = s + c.
    double anchor_offset() const { return anchor_offset_; }
    double anchored(double s) const { return s + anchor_offset_; }

    double mass() const { return m_; }
    double horizon() const { return r0_; }
    double series_cutoff() const { return s_series_; }

    double rho2(double r) const { return 1.0 + r * r - 2.0 * m_ / r; }
    double rho(double r) const { return std::sqrt(std::max(0.0, rho2(r))); }

    // Even Taylor expansion of r(s) about the horizon (valid |s| small).
    double series_r_of_s(double s) const {
        const double s2 = s * s;
        return r0_ + s2 * (a2_ + s2 * (a4_ + s2 * a6_));
    }

    // r(s), valid for s >= -s_collar via the even reflection r(-s) = r(s).
    double r_of_s(double s) const {
        const double a = std::fabs(s);
        if (a <= s_series_) return series_r_of_s(a);
        if (a <= 2.0) {
            const int i = std::min(int((a - s_series_) / hA_), int(segA_.size()) - 1);
            return segA_[i].eval(a - (s_series_ + i * hA_));
        }
        if (a <= s_table_end_) {
            const int i = std::min(int((a - 2.0) / hB_), int(segB_.size()) - 1);
            return segB_[i].eval(a - (2.0 + i * hB_)) * std::sinh(a);
        }
        const double sh = std::sinh(a);
        return (1.0 + m_ / (3.0 * sh * sh * sh)) * sh;
    }

    // Radial derivatives d^n r / ds^n, n = 0..3. The derivatives come from
    // the closed forms in the r value (r' = rho(r), r'' = r + m/r^2, ...):
    // this keeps the flow constraint r'^2 = rho^2(r) exact to roundoff, so
    // curvature identities hold pointwise regardless of the table's own
    // accuracy. sign(s) rho(r(|s|)) is smooth through s = 0 (it behaves like
    // (k/2) s near the horizon sphere).
    void r_jets(double s, double& r, double& r1, double& r2, double& r3) const {
        const double a = std::fabs(s);
        const double sg = (s < 0.0) ? -1.0 : 1.0;
        r = r_of_s(a);
        r1 = sg * rho(r);
        r2 = r + m_ / (r * r);
        r3 = sg * (1.0 - 2.0 * m_ / (r * r * r)) * rho(r);
    }

    // s(r) = int_{r0}^{r} dr'/rho(r'), singularity removed at r0.
    double s_of_r(double r) const {
        if (r < r0_ - 1e-12) throw std::domain_error("s_of_r: r below horizon radius");
        if (r <= r0_) return 0.0;
        const double tau_max = std::sqrt(4.0 * (r - r0_) / k_);
        // integrand F(tau) = (k/2) tau / rho(r0 + k tau^2/4), F(0) = 1, smooth
        auto F = [this](double tau) {
            if (tau < 1e-14) return 1.0;
            const double rr = r0_ + k_ * tau * tau / 4.0;
            return 0.5 * k_ * tau / rho(rr);
        };
        // composite 20-point Gauss-Legendre
        static const double gx[10] = {
            0.0765265211334973, 0.2277858511416451, 0.3737060887154195,
            0.5108670019508271, 0.6360536807265150, 0.7463319064601508,
            0.8391169718222188, 0.9122344282513259, 0.9639719272779138,
            0.9931285991850949};
        static const double gw[10] = {
            0.1527533871307258, 0.1491729864726037, 0.1420961093183820,
            0.1316886384491766, 0.1181945319615184, 0.1019301198172404,
            0.0832767415767048, 0.0626720483341091, 0.0406014298003869,
            0.0176140071391521};
        const int npan = std::max(1, int(std::ceil(tau_max / 0.25)));
        const double hp = tau_max / npan;
        double acc = 0.0;
        for (int p = 0; p < npan; ++p) {
            const double c = hp * (p + 0.5), hw = 0.5 * hp;
            double loc = 0.0;
            for (int j = 0; j < 10; ++j)
                loc += gw[j] * (F(c + hw * gx[j]) + F(c - hw * gx[j]));
            acc += loc * hw;
        }
        return acc;
    }

    // H_m(r) = (2/r) rho(r), the mean curvature of the coordinate sphere S_r.
    double coordinate_mean_curvature(double r) const {
        if (r < r0_ - 1e-12)
            throw std::domain_error("coordinate_mean_curvature: r below horizon");
        if (r <= r0_) return 0.0;
        return 2.0 * rho(r) / r;
    }

    double mean_curvature_of_s(double s) const {
        double r, r1, r2, r3;
        r_jets(s, r, r1, r2, r3);
        return 2.0 * r1 / r;
    }

    struct Curvature {
        double ric_ss;      // Ric(d_s, d_s)
        double ric_sphere;  // Ric(e_i, e_j) = ric_sphere * delta_ij, frame-normalized
        double scalar;
    };

    Curvature background_curvature(double s) const {
        const double r = r_of_s(std::fabs(s));
        const double r3 = r * r * r;
        return {-2.0 - 2.0 * m_ / r3, -2.0 + m_ / r3, -6.0};
    }

    // Eigenvalue of the Jacobi operator L_r = (1/r^2)(Lap0 + 2 - 6m/r) on the
    // degree-l harmonic subspace. Defined for every r > 0 (the boundary sphere
    // r = r0 included).
    double jacobi_spectrum(double r, int l) const {
        if (!(r > 0.0)) throw std::domain_error("jacobi_spectrum: r must be positive");
        return (-double(l) * (l + 1) + 2.0 - 6.0 * m_ / r) / (r * r);
    }

    double v_profile(double s) const {
        if (!(s > 0.0)) throw std::domain_error("v_profile: s must be positive");
        const double u = r_of_s(s) / std::sinh(s);
        return u * u;
    }

  private:
    void build_tables() {
        // Region A: r(s) on [s_series, 2], RK4 in r with fine substeps.
        const int nA = 1024;
        hA_ = (2.0 - s_series_) / nA;
        std::vector<double> rA(nA + 1);
        rA[0] = series_r_of_s(s_series_);
        const int subA = 8;
        for (int i = 0; i < nA; ++i) {
            double r = rA[i];
            const double h = hA_ / subA;
            for (int j = 0; j < subA; ++j) {
                const double k1 = rho(r);
                const double k2 = rho(r + 0.5 * h * k1);
                const double k3 = rho(r + 0.5 * h * k2);
                const double k4 = rho(r + h * k3);
                r += h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0;
            }
            rA[i + 1] = r;
        }
        segA_.resize(nA);
        for (int i = 0; i < nA; ++i) {
            const double y0 = rA[i], y1 = rA[i + 1];
            segA_[i].fit(hA_, y0, rho(y0), y0 + m_ / (y0 * y0), y1, rho(y1),
                         y1 + m_ / (y1 * y1));
        }

        // Region B: u(s) = r(s)/sinh(s) on [2, table_end]; the ODE is written
        // without cancellation between the O(e^s) terms:
        //   u' = (1 - u^2 - 2m/r) / (sinh (rho + u cosh)),  r = u sinh.
        auto du = [this](double s, double u) {
            const double sh = std::sinh(s), ch = std::cosh(s);
            const double r = u * sh;
            return (1.0 - u * u - 2.0 * m_ / r) / (sh * (rho(r) + u * ch));
        };
        const int nB = int((s_table_end_ - 2.0) * 64.0 + 0.5);
        hB_ = (s_table_end_ - 2.0) / nB;
        std::vector<double> uB(nB + 1);
        uB[0] = rA[nA] / std::sinh(2.0);
        const int subB = 8;
        for (int i = 0; i < nB; ++i) {
            double u = uB[i];
            double s = 2.0 + i * hB_;
            const double h = hB_ / subB;
            for (int j = 0; j < subB; ++j) {
                const double k1 = du(s, u);
                const double k2 = du(s + 0.5 * h, u + 0.5 * h * k1);
                const double k3 = du(s + 0.5 * h, u + 0.5 * h * k2);
                const double k4 = du(s + h, u + h * k3);
                u += h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0;
                s += h;
            }
            uB[i + 1] = u;
        }
        segB_.resize(nB);
        for (int i = 0; i < nB; ++i) {
            const double s0 = 2.0 + i * hB_, s1 = s0 + hB_;
            auto upp = [this, du](double s, double u) {
                const double sh = std::sinh(s), ch = std::cosh(s);
                const double r = u * sh;
                const double u1 = du(s, u);
                return (m_ / (r * r) - 2.0 * u1 * ch) / sh;
            };
            segB_[i].fit(hB_, uB[i], du(s0, uB[i]), upp(s0, uB[i]), uB[i + 1],
                         du(s1, uB[i + 1]), upp(s1, uB[i + 1]));
        }
    }

    double m_, s_series_, s_table_end_;
    double r0_, k_, a2_, a4_, a6_;
    double anchor_offset_ = 0.0;
    double hA_ = 0, hB_ = 0;
    std::vector<detail::QuinticSeg> segA_, segB_;
};

}  // namespace sadsfol
