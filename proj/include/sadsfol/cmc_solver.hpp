// cmc_solver.hpp
// Newton solvers for constant-mean-curvature graphs over coordinate spheres.
//
// Free solve: residual Phi(u) = H(s, u, g) - mean_{dS2} H on the zero-mean
// coefficient space (the mean-curvature value is implicit). Prescribed
// solve: Psi(u) = H(s, u, g) - target on the full coefficient space, guarded
// away from the r = 3m resonance where the unconstrained linearization
// degenerates.
//
// Jacobians are dense central finite differences along harmonic basis
// directions, one LU factorization per Newton step. Column probes reuse the
// precomputed basis derivative tables (a coefficient shift is a rank-one
// update of the synthesized jet), so a probe costs one pointwise geometry
// sweep.

#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <thread>
#include <vector>

#include "graph_geometry.hpp"

namespace sadsfol {

struct SolveSettings {
    double tol = 1e-10;     // sup-norm of the residual field
    int max_iter = 12;
    double fd_step = 1e-6;  // central difference step, scaled by max(1, |u|)
    int max_damping = 5;
    int threads = 0;        // 0 = hardware concurrency
    // After the sup-norm tolerance is met, quasi-Newton polish passes reuse
    // the last factorization to push the residual coefficients to the
    // evaluation floor. The linearization degenerates on the l = 1 modes as
    // r -> inf (eigenvalue 6m/r^3), so a plain residual-tolerance stop would
    // leave amplified l = 1 components in u and drown the tail diagnostics.
    int polish_passes = 2;
    double newton_floor = 1e-13;  // skip iterating entirely below this sup-norm
};

struct CmcSolution {
    GraphSurface surface;
    double H_const = 0.0;
    std::vector<double> residual_history;
    bool converged = false;
    double stability_eig = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

inline int solver_threads(const SolveSettings& st) {
    if (st.threads > 0) return st.threads;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : int(hw);
}

inline SphereGrid::Jet jet_of(const SphereGrid& grid, const VectorXd& coeffs) {
    return grid.synth_jet(coeffs, false);
}

// base jet shifted by delta along basis column k
inline SphereGrid::Jet jet_shift(const SphereGrid& grid, const SphereGrid::Jet& base,
                                 int k, double delta) {
    SphereGrid::Jet j;
    j.v = base.v + delta * grid.basis().col(k);
    j.t = base.t + delta * grid.basis_t().col(k);
    j.p = base.p + delta * grid.basis_p().col(k);
    j.tt = base.tt + delta * grid.basis_tt().col(k);
    j.tp = base.tp + delta * grid.basis_tp().col(k);
    j.pp = base.pp + delta * grid.basis_pp().col(k);
    return j;
}

struct ResidualOps {
    const PerturbedMetric* metric;
    const SphereGrid* grid;
    const MetricNodeCache* cache;
    double s_base;
    bool zero_mean;  // free solve: unknown/residual space excludes l = 0
    double target;   // prescribed solve target (ignored when zero_mean)

    int dim() const { return zero_mean ? grid->ncoef() - 1 : grid->ncoef(); }

    // full coefficient vector from the unknown vector
    VectorXd expand(const VectorXd& x) const {
        if (!zero_mean) return x;
        VectorXd c = VectorXd::Zero(grid->ncoef());
        c.tail(x.size()) = x;
        return c;
    }

    VectorXd residual_from_jet(const SphereGrid::Jet& uj, double* supnorm) const {
        const VectorXd H = mean_curvature_values(*metric, *grid, *cache, s_base, uj);
        const VectorXd hc = grid->analyze(H);
        VectorXd res;
        double ref;
        if (zero_mean) {
            res = hc.tail(grid->ncoef() - 1);
            ref = hc[0] / std::sqrt(4.0 * M_PI);  // the mean
        } else {
            res = hc;
            res[0] -= target * std::sqrt(4.0 * M_PI);
            ref = target;
        }
        if (supnorm) *supnorm = (H.array() - ref).abs().maxCoeff();
        return res;
    }
};

inline Eigen::MatrixXd fd_jacobian(const ResidualOps& ops, const SphereGrid::Jet& base,
                                   double delta, int nthreads) {
    const int n = ops.dim();
    const int off = ops.zero_mean ? 1 : 0;
    Eigen::MatrixXd J(n, n);
    auto work = [&](int k0, int k1) {
        for (int k = k0; k < k1; ++k) {
            const auto jp = jet_shift(*ops.grid, base, k + off, delta);
            const auto jm = jet_shift(*ops.grid, base, k + off, -delta);
            const VectorXd rp = ops.residual_from_jet(jp, nullptr);
            const VectorXd rm = ops.residual_from_jet(jm, nullptr);
            J.col(k) = (rp - rm) / (2.0 * delta);
        }
    };
    if (nthreads <= 1) {
        work(0, n);
    } else {
        std::vector<std::thread> pool;
        const int chunk = (n + nthreads - 1) / nthreads;
        for (int t = 0; t < nthreads; ++t) {
            const int k0 = t * chunk, k1 = std::min(n, k0 + chunk);
            if (k0 < k1) pool.emplace_back(work, k0, k1);
        }
        for (auto& th : pool) th.join();
    }
    return J;
}

inline CmcSolution newton_solve(const ResidualOps& ops, const VectorXd& x0,
                                const SolveSettings& st) {
    const SphereGrid& grid = *ops.grid;
    const int nthreads = solver_threads(st);
    VectorXd x = x0;
    CmcSolution sol;

    auto jet_of_x = [&](const VectorXd& xx) {
        return grid.synth_jet(ops.expand(xx), false);
    };

    SphereGrid::Jet uj = jet_of_x(x);
    double sup = 0.0;
    VectorXd res = ops.residual_from_jet(uj, &sup);
    sol.residual_history.push_back(sup);

    std::optional<Eigen::PartialPivLU<Eigen::MatrixXd>> lu;
    const bool needs_iteration = sup > st.newton_floor;

    for (int it = 0; it < st.max_iter && (sup > st.tol || (it == 0 && needs_iteration));
         ++it) {
        const double delta = st.fd_step * std::max(1.0, uj.v.cwiseAbs().maxCoeff());
        Eigen::MatrixXd J = fd_jacobian(ops, uj, delta, nthreads);
        lu.emplace(J);
        const VectorXd step = lu->solve(-res);
        if (!step.allFinite())
            throw SolverDivergence("cmc solver: linear solve produced non-finite step");

        double lambda = 1.0;
        bool accepted = false;
        for (int dtry = 0; dtry <= st.max_damping; ++dtry) {
            const VectorXd xn = x + lambda * step;
            const auto ujn = jet_of_x(xn);
            double supn;
            const VectorXd resn = ops.residual_from_jet(ujn, &supn);
            if (supn <= sup || supn <= st.tol) {
                x = xn;
                uj = ujn;
                res = resn;
                sup = supn;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if (!accepted) {
            if (sup <= st.tol) break;  // stuck at the evaluation floor, but converged
            std::ostringstream msg;
            msg << "cmc solver: residual increase persisted after damping; history:";
            for (double r : sol.residual_history) msg << " " << r;
            throw SolverDivergence(msg.str());
        }
        sol.residual_history.push_back(sup);
    }

    if (sup > st.tol) {
        std::ostringstream msg;
        msg << "cmc solver: no convergence within " << st.max_iter
            << " iterations; residual history:";
        for (double r : sol.residual_history) msg << " " << r;
        throw SolverDivergence(msg.str());
    }

    // quasi-Newton polish: reuse the factorization to push the residual
    // coefficients toward the evaluation floor
    if (lu) {
        for (int p = 0; p < st.polish_passes; ++p) {
            const VectorXd step = lu->solve(-res);
            if (!step.allFinite()) break;
            const VectorXd xn = x + step;
            const auto ujn = jet_of_x(xn);
            double supn;
            const VectorXd resn = ops.residual_from_jet(ujn, &supn);
            if (resn.norm() >= res.norm()) break;
            x = xn;
            uj = ujn;
            res = resn;
            sup = supn;
        }
    }

    sol.converged = true;
    sol.surface.s_base = ops.s_base;
    sol.surface.u_coeffs = ops.expand(x);
    const VectorXd H = mean_curvature_values(*ops.metric, grid, *ops.cache, ops.s_base, uj);
    sol.H_const = ops.zero_mean ? grid.integrate(H) / (4.0 * M_PI) : ops.target;
    return sol;
}

}  // namespace detail

// Free CMC graph over S_s: unique zero-mean u with H(s, u, g) constant.
// At s = 0 with a minimal boundary the root u = 0 is returned directly.
inline CmcSolution solve_free_cmc(const PerturbedMetric& metric, const SphereGrid& grid,
                                  const MetricNodeCache& cache, double s,
                                  const VectorXd& u0, const SolveSettings& st = {}) {
    detail::ResidualOps ops{&metric, &grid, &cache, s, true, 0.0};
    if (s == 0.0) {
        const auto uj = grid.synth_jet(VectorXd::Zero(grid.ncoef()), false);
        double sup;
        detail::ResidualOps probe{&metric, &grid, &cache, 0.0, true, 0.0};
        probe.residual_from_jet(uj, &sup);
        const VectorXd H = mean_curvature_values(metric, grid, cache, 0.0, uj);
        if (H.cwiseAbs().maxCoeff() <= 1e-8) {
            CmcSolution sol;
            sol.converged = true;
            sol.surface.s_base = 0.0;
            sol.surface.u_coeffs = VectorXd::Zero(grid.ncoef());
            sol.H_const = grid.integrate(H) / (4.0 * M_PI);
            sol.residual_history.push_back(sup);
            return sol;
        }
    }
    VectorXd x0 = u0.size() == grid.ncoef() ? VectorXd(u0.tail(grid.ncoef() - 1))
                                            : VectorXd::Zero(grid.ncoef() - 1);
    return detail::newton_solve(ops, x0, st);
}

// Graph over S_s with prescribed constant mean curvature `target`
// (default H_m(r(s))). Guarded away from the r = 3m resonance.
inline CmcSolution solve_prescribed_cmc(const PerturbedMetric& metric,
                                        const SphereGrid& grid,
                                        const MetricNodeCache& cache, double s,
                                        const SolveSettings& st = {},
                                        double target = std::numeric_limits<double>::quiet_NaN(),
                                        const VectorXd* u0 = nullptr) {
    const auto& bg = metric.background();
    const double r = bg.r_of_s(s);
    const double m = bg.mass();
    if (std::fabs(r - 3.0 * m) < 0.1 * 3.0 * m)
        throw ResonanceError("prescribed-cmc solve too close to the r = 3m resonance");
    detail::ResidualOps ops{&metric, &grid, &cache, s, false,
                            std::isnan(target) ? bg.coordinate_mean_curvature(r) : target};
    VectorXd x0 = (u0 && u0->size() == grid.ncoef()) ? *u0
                                                     : VectorXd::Zero(grid.ncoef());
    return detail::newton_solve(ops, x0, st);
}

// Weak-stability quadratic form on the dSigma-mean-free space spanned by
// B_k = Y_k - (int Y_k dS / int Y_0 dS) Y_0, k >= 1:
//   Q(phi, psi) = int <grad phi, grad psi>_ghat dS - int (Ric(N,N)+|A|^2) phi psi dS
//   M(phi, psi) = int phi psi dS.
struct StabilityForm {
    Eigen::MatrixXd Q, M;
};

inline StabilityForm jacobi_matrix(const PerturbedMetric& metric, const SphereGrid& grid,
                                   const MetricNodeCache& cache,
                                   const GraphSurface& surf, int lmax = -1) {
    const auto sg = compute_geometry(metric, grid, cache, surf, true);
    const int nn = grid.nnodes();
    const int L = (lmax < 0) ? grid.max_degree() : std::min(lmax, grid.max_degree());
    const int nc = sh_count(L);

    VectorXd w(nn), c(nn);
    for (int n = 0; n < nn; ++n) {
        w[n] = grid.weight(n) * sg.area_weight[n];
        c[n] = sg.ric_NN[n] + sg.A_sq[n];
    }

    // dSigma-mean-free basis
    VectorXd mk = grid.basis().leftCols(nc).transpose() * w;  // int Y_k dSigma
    const double m0 = mk[0];
    Eigen::VectorXd ratio = mk.tail(nc - 1) / m0;

    Eigen::MatrixXd B = grid.basis().middleCols(1, nc - 1) -
                        grid.basis().col(0) * ratio.transpose();
    Eigen::MatrixXd Bt = grid.basis_t().middleCols(1, nc - 1) -
                         grid.basis_t().col(0) * ratio.transpose();
    Eigen::MatrixXd Bp = grid.basis_p().middleCols(1, nc - 1) -
                         grid.basis_p().col(0) * ratio.transpose();

    StabilityForm f;
    f.Q = Bt.transpose() * (w.cwiseProduct(sg.inv_tt)).asDiagonal() * Bt +
          Bt.transpose() * (w.cwiseProduct(sg.inv_tp)).asDiagonal() * Bp +
          Bp.transpose() * (w.cwiseProduct(sg.inv_tp)).asDiagonal() * Bt +
          Bp.transpose() * (w.cwiseProduct(sg.inv_pp)).asDiagonal() * Bp -
          B.transpose() * (w.cwiseProduct(c)).asDiagonal() * B;
    f.Q = 0.5 * (f.Q + f.Q.transpose()).eval();
    f.M = B.transpose() * w.asDiagonal() * B;
    f.M = 0.5 * (f.M + f.M.transpose()).eval();
    return f;
}

inline double stability_eigenvalue(const PerturbedMetric& metric, const SphereGrid& grid,
                                   const MetricNodeCache& cache,
                                   const GraphSurface& surf, int lmax = -1) {
    const auto f = jacobi_matrix(metric, grid, cache, surf, lmax);
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(f.Q, f.M);
    if (es.info() != Eigen::Success)
        throw GeometryError("stability eigenvalue: generalized eigensolver failed");
    return es.eigenvalues().minCoeff();
}

}  // namespace sadsfol
