// sphere_harmonics.hpp
// Real spherical harmonics on (S^2, g_0) in the unit-L2-norm convention,
// with theta-derivatives up to third order. Pole-free evaluation only
// (theta strictly inside (0, pi)); all grids in this library exclude poles.

#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

namespace sadsfol {

// Flat index for the coefficient vector of a degree-L expansion:
// (l, m) -> l^2 + l + m, m in [-l, l].
inline int sh_index(int l, int m) { return l * l + l + m; }
inline int sh_count(int L) { return (L + 1) * (L + 1); }

// Triangular index for (l, m), 0 <= m <= l.
inline int tri_index(int l, int m) { return l * (l + 1) / 2 + m; }
inline int tri_count(int L) { return (L + 1) * (L + 2) / 2; }

// Fully normalized associated Legendre functions Pt_l^m(cos theta) with
// int_{-1}^{1} Pt^2 dx = 1, no Condon-Shortley phase, plus d/dtheta
// derivatives to third order. Output arrays are sized tri_count(L).
//
// Recurrences: seed Pt_0^0 = 1/sqrt(2),
//   Pt_m^m     = sqrt((2m+1)/(2m)) sin(theta) Pt_{m-1}^{m-1}
//   Pt_{m+1}^m = sqrt(2m+3) x Pt_m^m
//   Pt_l^m     = a(x Pt_{l-1}^m - b Pt_{l-2}^m)
// First derivative uses the lowering relation; second and third come from
// the associated Legendre ODE differentiated once.
struct LegendreTable {
    std::vector<double> v, d1, d2, d3;

    LegendreTable(int L, double theta) { compute(L, theta); }

    void compute(int L, double theta) {
        if (theta <= 0.0 || theta >= M_PI)
            throw std::domain_error("LegendreTable: theta must lie strictly in (0, pi)");
        const int n = tri_count(L);
        v.assign(n, 0.0);
        d1.assign(n, 0.0);
        d2.assign(n, 0.0);
        d3.assign(n, 0.0);

        const double x = std::cos(theta);
        const double sx = std::sin(theta);
        const double cot = x / sx;

        // values
        v[tri_index(0, 0)] = 1.0 / std::sqrt(2.0);
        for (int m = 1; m <= L; ++m)
            v[tri_index(m, m)] =
                std::sqrt((2.0 * m + 1.0) / (2.0 * m)) * sx * v[tri_index(m - 1, m - 1)];
        for (int m = 0; m < L; ++m)
            v[tri_index(m + 1, m)] = std::sqrt(2.0 * m + 3.0) * x * v[tri_index(m, m)];
        for (int m = 0; m <= L; ++m)
            for (int l = m + 2; l <= L; ++l) {
                const double a =
                    std::sqrt((4.0 * l * l - 1.0) / (double(l) * l - double(m) * m));
                const double b = std::sqrt((double(l - 1) * (l - 1) - double(m) * m) /
                                           (4.0 * double(l - 1) * (l - 1) - 1.0));
                v[tri_index(l, m)] =
                    a * (x * v[tri_index(l - 1, m)] - b * v[tri_index(l - 2, m)]);
            }

        // d/dtheta via lowering: Pt' = (l x Pt_l^m - e_lm Pt_{l-1}^m)/sin,
        // e_lm = sqrt((2l+1)/(2l-1) (l^2-m^2)).
        for (int l = 0; l <= L; ++l)
            for (int m = 0; m <= l; ++m) {
                double low = 0.0;
                if (l > m) {
                    const double e = std::sqrt((2.0 * l + 1.0) / (2.0 * l - 1.0) *
                                               (double(l) * l - double(m) * m));
                    low = e * v[tri_index(l - 1, m)];
                }
                d1[tri_index(l, m)] = (l * x * v[tri_index(l, m)] - low) / sx;
            }

        // ODE: P'' = -cot P' - (lam - m^2/sin^2) P, lam = l(l+1);
        // P''' = -cot P'' + P'/sin^2 - (lam - m^2/sin^2) P' - 2 m^2 cot/sin^2 P.
        const double is2 = 1.0 / (sx * sx);
        for (int l = 0; l <= L; ++l)
            for (int m = 0; m <= l; ++m) {
                const int k = tri_index(l, m);
                const double lam = double(l) * (l + 1);
                const double q = lam - double(m) * m * is2;
                d2[k] = -cot * d1[k] - q * v[k];
                d3[k] = -cot * d2[k] + is2 * d1[k] - q * d1[k] -
                        2.0 * double(m) * m * cot * is2 * v[k];
            }
    }
};

// Angular 3-jet of a scalar on S^2 in (theta, phi) coordinates.
struct AngularJet {
    double v = 0;
    double t = 0, p = 0;             // first derivatives
    double tt = 0, tp = 0, pp = 0;   // second
    double ttt = 0, ttp = 0, tpp = 0, ppp = 0;  // third
};

// Real harmonic Y_{l,m}: m=0 -> Pt/sqrt(2pi); m>0 -> Pt cos(m phi)/sqrt(pi);
// m<0 -> Pt sin(|m| phi)/sqrt(pi). Unit L2 norm on S^2.
inline AngularJet real_harmonic_jet(int l, int m, double theta, double phi) {
    if (l < 0 || std::abs(m) > l) throw std::domain_error("real_harmonic_jet: bad (l, m)");
    LegendreTable T(l, theta);
    const int k = tri_index(l, std::abs(m));
    const int ma = std::abs(m);

    double az, az1, az2, az3;  // azimuthal factor and phi-derivatives
    double norm;
    if (m == 0) {
        norm = 1.0 / std::sqrt(2.0 * M_PI);
        az = 1.0; az1 = az2 = az3 = 0.0;
    } else {
        norm = 1.0 / std::sqrt(M_PI);
        const double c = std::cos(ma * phi), s = std::sin(ma * phi);
        if (m > 0) { az = c; az1 = -ma * s; az2 = -ma * ma * c; az3 = ma * ma * ma * s; }
        else       { az = s; az1 =  ma * c; az2 = -ma * ma * s; az3 = -ma * ma * ma * c; }
    }

    AngularJet j;
    j.v   = norm * T.v[k] * az;
    j.t   = norm * T.d1[k] * az;
    j.p   = norm * T.v[k] * az1;
    j.tt  = norm * T.d2[k] * az;
    j.tp  = norm * T.d1[k] * az1;
    j.pp  = norm * T.v[k] * az2;
    j.ttt = norm * T.d3[k] * az;
    j.ttp = norm * T.d2[k] * az1;
    j.tpp = norm * T.d1[k] * az2;
    j.ppp = norm * T.v[k] * az3;
    return j;
}

inline double real_harmonic(int l, int m, double theta, double phi) {
    return real_harmonic_jet(l, m, theta, phi).v;
}

}  // namespace sadsfol
