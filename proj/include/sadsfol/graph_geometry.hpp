// graph_geometry.hpp
// Extrinsic and intrinsic geometry of graph surfaces
//   S_s(u) = {(s + u(x), x)},  u band-limited on the sphere grid.
//
// All surface quantities are assembled pointwise from analytic ambient jets
// and spectral derivatives of u; in particular the intrinsic Gaussian
// curvature comes from the Brioschi formula with the second derivatives of
// the induced metric expanded through ambient partials and u-derivatives up
// to (theta theta phi) / (theta phi phi) order. No grid finite differences
// anywhere, so the Gauss-equation residual measures pure consistency of the
// stack.

#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "errors.hpp"
#include "metric_field.hpp"
#include "sphere_spectral.hpp"

namespace sadsfol {

// Family angular factors cached per grid node (they do not move with u).
struct MetricNodeCache {
    std::vector<AngularJet> ang;

    static MetricNodeCache build(const SphereGrid& grid, const PerturbedMetric& g) {
        MetricNodeCache c;
        c.ang.resize(grid.nnodes());
        for (int n = 0; n < grid.nnodes(); ++n)
            c.ang[n] = g.angular_factor(grid.theta(n), grid.phi(n));
        return c;
    }
};

struct GraphSurface {
    double s_base = 0.0;
    VectorXd u_coeffs;  // harmonic coefficients of the graph function
};

struct SurfaceGeometry {
    VectorXd H;             // mean curvature per node
    VectorXd area_weight;   // dSigma / dS2
    VectorXd ring_A_sq;     // |Aring|^2
    VectorXd A_sq;          // |A|^2
    VectorXd ds_tan_sq;     // |d_s^T|^2_g
    VectorXd gaussK;        // intrinsic curvature (full path only)
    VectorXd ric_NN;        // ambient Ric(N, N) (full path only)
    VectorXd scalarR;       // ambient scalar curvature (full path only)
    VectorXd inv_tt, inv_tp, inv_pp;  // inverse induced metric (full path only)
    VectorXd s_of_node;     // s_base + u
    VectorXd orient;        // g(N, d_s) (positive = outward)
    double area = 0.0;
    double s_inner = 0.0, s_outer = 0.0;
    bool full = false;
};

namespace detail {

struct NodeScratch {
    // per-node geometric assembly shared by the fast and full paths
    double E, F, G;           // induced metric
    double iE, iF, iG;        // inverse (2x2)
    double H;
    double A11, A12, A22;
    double ringAsq, Asq, dstan, weight, orient;
    Eigen::Vector3d Nup;
    MetricJets mj;
};

inline NodeScratch node_geometry(const PerturbedMetric& metric, double theta,
                                 const AngularJet& ang, double sp, double u1, double u2,
                                 double u11, double u12, double u22) {
    NodeScratch ns;
    ns.mj = metric.metric_with_angular(sp, theta, ang);
    const Eigen::Matrix3d& gm = ns.mj.g;

    const Eigen::Vector3d E1(u1, 1.0, 0.0), E2(u2, 0.0, 1.0);
    ns.E = E1.dot(gm * E1);
    ns.F = E1.dot(gm * E2);
    ns.G = E2.dot(gm * E2);
    const double det = ns.E * ns.G - ns.F * ns.F;
    if (!(det > 0.0)) throw GeometryError("degenerate induced metric on graph surface");
    ns.iE = ns.G / det;
    ns.iG = ns.E / det;
    ns.iF = -ns.F / det;

    const Eigen::Vector3d nu_low(1.0, -u1, -u2);
    const Eigen::Matrix3d inv = gm.inverse();
    const Eigen::Vector3d nu_up = inv * nu_low;
    const double n2 = nu_up.dot(nu_low);
    if (!(n2 > 0.0)) throw GeometryError("degenerate conormal on graph surface");
    const double nrm = std::sqrt(n2);
    ns.Nup = nu_up / nrm;
    ns.orient = 1.0 / nrm;  // g(N, d_s)

    double Gamma[3][3][3];
    christoffel(ns.mj, Gamma);
    auto second_form = [&](const Eigen::Vector3d& Ei, const Eigen::Vector3d& Ej,
                           double uij) {
        Eigen::Vector3d cov(uij, 0.0, 0.0);
        for (int a = 0; a < 3; ++a) {
            double acc = 0.0;
            for (int b = 0; b < 3; ++b)
                for (int c = 0; c < 3; ++c) acc += Gamma[a][b][c] * Ei[b] * Ej[c];
            cov[a] += acc;
        }
        return -nu_low.dot(cov) / nrm;
    };
    ns.A11 = second_form(E1, E1, u11);
    ns.A12 = second_form(E1, E2, u12);
    ns.A22 = second_form(E2, E2, u22);

    ns.H = ns.iE * ns.A11 + 2.0 * ns.iF * ns.A12 + ns.iG * ns.A22;

    // trace-free part assembled componentwise (no large cancellations)
    const double h2 = 0.5 * ns.H;
    const double R11 = ns.A11 - h2 * ns.E;
    const double R12 = ns.A12 - h2 * ns.F;
    const double R22 = ns.A22 - h2 * ns.G;
    ns.ringAsq = ns.iE * ns.iE * R11 * R11 + ns.iG * ns.iG * R22 * R22 +
                 2.0 * ns.iF * ns.iF * R11 * R22 +
                 4.0 * ns.iF * (ns.iE * R11 + ns.iG * R22) * R12 +
                 2.0 * (ns.iE * ns.iG + ns.iF * ns.iF) * R12 * R12;
    ns.Asq = ns.ringAsq + 0.5 * ns.H * ns.H;

    // tangential part of d_s: c_i = g(d_s, E_i)
    const double c1 = gm(0, 0) * u1 + gm(0, 1);
    const double c2 = gm(0, 0) * u2 + gm(0, 2);
    ns.dstan = ns.iE * c1 * c1 + 2.0 * ns.iF * c1 * c2 + ns.iG * c2 * c2;

    ns.weight = std::sqrt(det);  // divided by sin(theta) by the caller
    return ns;
}

}  // namespace detail

// Fast path: mean curvature values on the grid from a pre-synthesized jet of
// u. The jet must come from grid.synth_jet(u_coeffs).
inline VectorXd mean_curvature_values(const PerturbedMetric& metric,
                                      const SphereGrid& grid,
                                      const MetricNodeCache& cache, double s_base,
                                      const SphereGrid::Jet& uj) {
    VectorXd H(grid.nnodes());
    for (int n = 0; n < grid.nnodes(); ++n) {
        const auto ns = detail::node_geometry(
            metric, grid.theta(n), cache.ang[n], s_base + uj.v[n], uj.t[n], uj.p[n],
            uj.tt[n], uj.tp[n], uj.pp[n]);
        H[n] = ns.H;
    }
    return H;
}

// Full geometry: extrinsic data, ambient curvature, intrinsic K (Brioschi),
// area and radii.
inline SurfaceGeometry compute_geometry(const PerturbedMetric& metric,
                                        const SphereGrid& grid,
                                        const MetricNodeCache& cache,
                                        const GraphSurface& surf, bool full = true) {
    const int nn = grid.nnodes();
    SurfaceGeometry sg;
    sg.full = full;
    sg.H.resize(nn);
    sg.area_weight.resize(nn);
    sg.ring_A_sq.resize(nn);
    sg.A_sq.resize(nn);
    sg.ds_tan_sq.resize(nn);
    sg.s_of_node.resize(nn);
    sg.orient.resize(nn);
    if (full) {
        sg.gaussK.resize(nn);
        sg.ric_NN.resize(nn);
        sg.scalarR.resize(nn);
        sg.inv_tt.resize(nn);
        sg.inv_tp.resize(nn);
        sg.inv_pp.resize(nn);
    }

    const auto uj = grid.synth_jet(surf.u_coeffs, full);

    double area = 0.0;
    for (int n = 0; n < nn; ++n) {
        const double theta = grid.theta(n);
        const double sp = surf.s_base + uj.v[n];
        const double u1 = uj.t[n], u2 = uj.p[n];
        const double u11 = uj.tt[n], u12 = uj.tp[n], u22 = uj.pp[n];
        const auto ns = detail::node_geometry(metric, theta, cache.ang[n], sp, u1, u2,
                                              u11, u12, u22);
        sg.H[n] = ns.H;
        sg.ring_A_sq[n] = ns.ringAsq;
        sg.A_sq[n] = ns.Asq;
        sg.ds_tan_sq[n] = ns.dstan;
        sg.s_of_node[n] = sp;
        sg.orient[n] = ns.orient;
        const double w = ns.weight / grid.sin_theta(n);
        sg.area_weight[n] = w;
        area += grid.weight(n) * w;

        if (full) {
            const auto cv = curvature_from_jets(ns.mj);
            sg.scalarR[n] = cv.scalar;
            sg.ric_NN[n] = ns.Nup.dot(cv.ric * ns.Nup);
            sg.inv_tt[n] = ns.iE;
            sg.inv_tp[n] = ns.iF;
            sg.inv_pp[n] = ns.iG;

            // Brioschi: total derivatives of the induced metric through the
            // ambient jets and the u-jet (third-order mixed entries).
            const auto& mj = ns.mj;
            auto comp = [&](int a, int b) { return mj.g(a, b); };
            auto d = [&](int c, int a, int b) { return mj.dg[c][a][b]; };
            auto d2c = [&](int c, int e, int a, int b) { return mj.d2g[c][e][a][b]; };
            const int S = 0, T = 1, P = 2;
            // first totals D1, D2 of a component
            auto D1 = [&](int a, int b) { return d(T, a, b) + d(S, a, b) * u1; };
            auto D2 = [&](int a, int b) { return d(P, a, b) + d(S, a, b) * u2; };
            // second totals
            auto D11 = [&](int a, int b) {
                return d2c(T, T, a, b) + 2.0 * d2c(S, T, a, b) * u1 +
                       d2c(S, S, a, b) * u1 * u1 + d(S, a, b) * u11;
            };
            auto D22 = [&](int a, int b) {
                return d2c(P, P, a, b) + 2.0 * d2c(S, P, a, b) * u2 +
                       d2c(S, S, a, b) * u2 * u2 + d(S, a, b) * u22;
            };
            auto D12 = [&](int a, int b) {
                return d2c(T, P, a, b) + d2c(S, T, a, b) * u2 + d2c(S, P, a, b) * u1 +
                       d2c(S, S, a, b) * u1 * u2 + d(S, a, b) * u12;
            };

            const double u112 = uj.ttp[n], u122 = uj.tpp[n];

            const double E = ns.E, F = ns.F, G = ns.G;
            const double Eu = D1(S, S) * u1 * u1 + 2.0 * comp(S, S) * u1 * u11 +
                              2.0 * D1(S, T) * u1 + 2.0 * comp(S, T) * u11 + D1(T, T);
            const double Ev = D2(S, S) * u1 * u1 + 2.0 * comp(S, S) * u1 * u12 +
                              2.0 * D2(S, T) * u1 + 2.0 * comp(S, T) * u12 + D2(T, T);
            const double Evv =
                D22(S, S) * u1 * u1 + 4.0 * D2(S, S) * u1 * u12 +
                2.0 * comp(S, S) * (u12 * u12 + u1 * u122) + 2.0 * D22(S, T) * u1 +
                4.0 * D2(S, T) * u12 + 2.0 * comp(S, T) * u122 + D22(T, T);

            const double Fu = D1(S, S) * u1 * u2 + comp(S, S) * (u11 * u2 + u1 * u12) +
                              D1(S, T) * u2 + comp(S, T) * u12 + D1(S, P) * u1 +
                              comp(S, P) * u11 + D1(T, P);
            const double Fv = D2(S, S) * u1 * u2 + comp(S, S) * (u12 * u2 + u1 * u22) +
                              D2(S, T) * u2 + comp(S, T) * u22 + D2(S, P) * u1 +
                              comp(S, P) * u12 + D2(T, P);
            const double Fuv =
                D12(S, S) * u1 * u2 + D1(S, S) * (u12 * u2 + u1 * u22) +
                D2(S, S) * (u11 * u2 + u1 * u12) +
                comp(S, S) * (u112 * u2 + u11 * u22 + u12 * u12 + u1 * u122) +
                D12(S, T) * u2 + D1(S, T) * u22 + D2(S, T) * u12 + comp(S, T) * u122 +
                D12(S, P) * u1 + D1(S, P) * u12 + D2(S, P) * u11 + comp(S, P) * u112 +
                D12(T, P);

            const double Gu = D1(S, S) * u2 * u2 + 2.0 * comp(S, S) * u2 * u12 +
                              2.0 * D1(S, P) * u2 + 2.0 * comp(S, P) * u12 + D1(P, P);
            const double Gv = D2(S, S) * u2 * u2 + 2.0 * comp(S, S) * u2 * u22 +
                              2.0 * D2(S, P) * u2 + 2.0 * comp(S, P) * u22 + D2(P, P);
            const double Guu =
                D11(S, S) * u2 * u2 + 4.0 * D1(S, S) * u2 * u12 +
                2.0 * comp(S, S) * (u12 * u12 + u2 * u112) + 2.0 * D11(S, P) * u2 +
                4.0 * D1(S, P) * u12 + 2.0 * comp(S, P) * u112 + D11(P, P);

            Eigen::Matrix3d M1, M2;
            M1 << -0.5 * Evv + Fuv - 0.5 * Guu, 0.5 * Eu, Fu - 0.5 * Ev,
                Fv - 0.5 * Gu, E, F,
                0.5 * Gv, F, G;
            M2 << 0.0, 0.5 * Ev, 0.5 * Gu,
                0.5 * Ev, E, F,
                0.5 * Gu, F, G;
            const double det = E * G - F * F;
            sg.gaussK[n] = (M1.determinant() - M2.determinant()) / (det * det);
        }
    }
    sg.area = area;
    sg.s_inner = sg.s_of_node.minCoeff();
    sg.s_outer = sg.s_of_node.maxCoeff();
    return sg;
}

// Convenience wrapper matching the operation contract.
inline SphereField mean_curvature(const PerturbedMetric& metric, GridPtr grid,
                                  double s, const SphereField& u) {
    const auto cache = MetricNodeCache::build(*grid, metric);
    GraphSurface surf{s, u.coeffs()};
    const auto sg = compute_geometry(metric, *grid, cache, surf, false);
    return SphereField::from_values(std::move(grid), sg.H);
}

inline double integrate_on_surface(const SphereGrid& grid, const SurfaceGeometry& sg,
                                   const VectorXd& f) {
    double acc = 0.0;
    for (int n = 0; n < grid.nnodes(); ++n)
        acc += grid.weight(n) * sg.area_weight[n] * f[n];
    return acc;
}

// m_H = sqrt(|S|/16pi) (1 - (1/16pi) int (H^2 - 4) dS)
inline double hawking_mass(const SphereGrid& grid, const SurfaceGeometry& sg) {
    const double a = sg.area;
    const double q =
        integrate_on_surface(grid, sg, (sg.H.array() * sg.H.array() - 4.0).matrix());
    return std::sqrt(a / (16.0 * M_PI)) * (1.0 - q / (16.0 * M_PI));
}

// Pointwise Gauss-equation residual 2K - (R - 2 Ric(N,N) + H^2 - |A|^2).
inline VectorXd gauss_equation_residual(const SphereGrid& grid,
                                        const SurfaceGeometry& sg) {
    if (!sg.full) throw GeometryError("gauss_equation_residual requires full geometry");
    VectorXd r(grid.nnodes());
    for (int n = 0; n < grid.nnodes(); ++n)
        r[n] = 2.0 * sg.gaussK[n] -
               (sg.scalarR[n] - 2.0 * sg.ric_NN[n] + sg.H[n] * sg.H[n] - sg.A_sq[n]);
    return r;
}

// Gauss-expansion identity residual:
//   int (H^2-4) dS - [16pi - int (8m - 12m |ds^T|^2)/sinh^3(st) dS + 2 int |Ar|^2 dS]
// with st the anchored coordinate of each surface point.
inline double gauss_expansion_residual(const SphereGrid& grid, const BackgroundModel& bg,
                                       const SurfaceGeometry& sg) {
    const double m = bg.mass();
    VectorXd h2m4 = (sg.H.array() * sg.H.array() - 4.0).matrix();
    const double lhs = integrate_on_surface(grid, sg, h2m4);
    VectorXd integrand(grid.nnodes());
    for (int n = 0; n < grid.nnodes(); ++n) {
        const double sh = std::sinh(bg.anchored(sg.s_of_node[n]));
        integrand[n] = (8.0 * m - 12.0 * m * sg.ds_tan_sq[n]) / (sh * sh * sh);
    }
    const double mid = integrate_on_surface(grid, sg, integrand);
    const double ring = integrate_on_surface(grid, sg, sg.ring_A_sq);
    return lhs - (16.0 * M_PI - mid + 2.0 * ring);
}

}  // namespace sadsfol
