// sphere_spectral.hpp
// Discretization of the round sphere: Gauss-Legendre colatitudes x equispaced
// longitudes, real spherical-harmonic analysis/synthesis, and spectral
// differentiation. Quadrature is exact for band-limited integrands up to
// degree 2L; poles are never grid nodes.

#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <memory>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include "sphere_harmonics.hpp"

namespace sadsfol {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Gauss-Legendre nodes/weights on [-1, 1] by Newton iteration on P_n.
inline void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
    x.resize(n);
    w.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
            }
            pp = n * (z * p0 - p1) / (z * z - 1.0);
            const double dz = p0 / pp;
            z -= dz;
            if (std::fabs(dz) < 1e-15) break;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        w[n - 1 - i] = w[i];
    }
}

// Quadrature grid + precomputed harmonic basis tables (values and theta/phi
// derivatives needed by the graph-geometry stack). Immutable once built.
class SphereGrid {
  public:
    explicit SphereGrid(int L)
        : SphereGrid(L, int(std::ceil(1.5 * (L + 1))), round_even(3 * (L + 1))) {}

    SphereGrid(int L, int ntheta, int nphi) : L_(L), ntheta_(ntheta), nphi_(nphi) {
        if (L < 1) throw std::invalid_argument("SphereGrid: L must be >= 1");
        if (ntheta < L + 1 || nphi < 2 * L + 1)
            throw std::invalid_argument("SphereGrid: grid too coarse for degree L");
        build();
    }

    int max_degree() const { return L_; }
    int ntheta() const { return ntheta_; }
    int nphi() const { return nphi_; }
    int nnodes() const { return ntheta_ * nphi_; }
    int ncoef() const { return sh_count(L_); }

    double theta(int node) const { return theta_[node / nphi_]; }
    double phi(int node) const { return phi_[node % nphi_]; }
    double weight(int node) const { return wnode_[node]; }
    double sin_theta(int node) const { return sin_theta_[node / nphi_]; }

    const MatrixXd& basis() const { return V_; }
    const MatrixXd& basis_t() const { return Tt_; }
    const MatrixXd& basis_p() const { return Tp_; }
    const MatrixXd& basis_tt() const { return Ttt_; }
    const MatrixXd& basis_tp() const { return Ttp_; }
    const MatrixXd& basis_pp() const { return Tpp_; }
    const MatrixXd& basis_ttp() const { return Tttp_; }
    const MatrixXd& basis_tpp() const { return Ttpp_; }

    VectorXd synthesize(const VectorXd& coeffs) const {
        check_coeffs(coeffs);
        return V_ * coeffs;
    }

    VectorXd analyze(const VectorXd& values) const {
        if (values.size() != nnodes())
            throw std::invalid_argument("analyze: node-count mismatch");
        return V_.transpose() * (wvec_.cwiseProduct(values));
    }

    double integrate(const VectorXd& values) const {
        if (values.size() != nnodes())
            throw std::invalid_argument("integrate: node-count mismatch");
        return wvec_.dot(values);
    }

    double integrate(const VectorXd& values, const VectorXd& weight_field) const {
        if (values.size() != nnodes() || weight_field.size() != nnodes())
            throw std::invalid_argument("integrate: node-count mismatch");
        return wvec_.dot(values.cwiseProduct(weight_field));
    }

    // Pointwise coordinate derivatives of a band-limited field, synthesized
    // from its coefficients. Third-order entries only when requested (they
    // feed the intrinsic-curvature evaluation).
    struct Jet {
        VectorXd v, t, p, tt, tp, pp, ttp, tpp;
    };

    Jet synth_jet(const VectorXd& coeffs, bool third_order = false) const {
        check_coeffs(coeffs);
        Jet j;
        j.v = V_ * coeffs;
        j.t = Tt_ * coeffs;
        j.p = Tp_ * coeffs;
        j.tt = Ttt_ * coeffs;
        j.tp = Ttp_ * coeffs;
        j.pp = Tpp_ * coeffs;
        if (third_order) {
            j.ttp = Tttp_ * coeffs;
            j.tpp = Ttpp_ * coeffs;
        }
        return j;
    }

  private:
    static int round_even(int n) { return (n % 2 == 0) ? n : n + 1; }

    void check_coeffs(const VectorXd& c) const {
        if (c.size() != ncoef())
            throw std::invalid_argument("SphereGrid: coefficient-count mismatch");
    }

    void build() {
        std::vector<double> gx, gw;
        gauss_legendre(ntheta_, gx, gw);
        theta_.resize(ntheta_);
        sin_theta_.resize(ntheta_);
        for (int i = 0; i < ntheta_; ++i) {
            theta_[i] = std::acos(gx[ntheta_ - 1 - i]);  // increasing theta
            sin_theta_[i] = std::sin(theta_[i]);
        }
        phi_.resize(nphi_);
        for (int j = 0; j < nphi_; ++j) phi_[j] = 2.0 * M_PI * j / nphi_;

        const double wphi = 2.0 * M_PI / nphi_;
        wnode_.resize(nnodes());
        wvec_.resize(nnodes());
        for (int i = 0; i < ntheta_; ++i)
            for (int j = 0; j < nphi_; ++j) {
                wnode_[i * nphi_ + j] = gw[ntheta_ - 1 - i] * wphi;
                wvec_[i * nphi_ + j] = wnode_[i * nphi_ + j];
            }

        const int nn = nnodes(), nc = ncoef();
        V_.resize(nn, nc);
        Tt_.resize(nn, nc);
        Tp_.resize(nn, nc);
        Ttt_.resize(nn, nc);
        Ttp_.resize(nn, nc);
        Tpp_.resize(nn, nc);
        Tttp_.resize(nn, nc);
        Ttpp_.resize(nn, nc);

        const double n0 = 1.0 / std::sqrt(2.0 * M_PI);
        const double n1 = 1.0 / std::sqrt(M_PI);
        for (int i = 0; i < ntheta_; ++i) {
            LegendreTable T(L_, theta_[i]);
            for (int j = 0; j < nphi_; ++j) {
                const int node = i * nphi_ + j;
                for (int l = 0; l <= L_; ++l)
                    for (int m = -l; m <= l; ++m) {
                        const int c = sh_index(l, m);
                        const int k = tri_index(l, std::abs(m));
                        const int ma = std::abs(m);
                        double az, az1, az2;
                        double norm;
                        if (m == 0) {
                            norm = n0;
                            az = 1.0; az1 = 0.0; az2 = 0.0;
                        } else {
                            norm = n1;
                            const double cc = std::cos(ma * phi_[j]);
                            const double ss = std::sin(ma * phi_[j]);
                            if (m > 0) { az = cc; az1 = -ma * ss; az2 = -double(ma) * ma * cc; }
                            else       { az = ss; az1 =  ma * cc; az2 = -double(ma) * ma * ss; }
                        }
                        V_(node, c) = norm * T.v[k] * az;
                        Tt_(node, c) = norm * T.d1[k] * az;
                        Tp_(node, c) = norm * T.v[k] * az1;
                        Ttt_(node, c) = norm * T.d2[k] * az;
                        Ttp_(node, c) = norm * T.d1[k] * az1;
                        Tpp_(node, c) = norm * T.v[k] * az2;
                        Tttp_(node, c) = norm * T.d2[k] * az1;
                        Ttpp_(node, c) = norm * T.d1[k] * az2;
                    }
            }
        }
    }

    int L_, ntheta_, nphi_;
    std::vector<double> theta_, phi_, sin_theta_;
    std::vector<double> wnode_;
    VectorXd wvec_;
    MatrixXd V_, Tt_, Tp_, Ttt_, Ttp_, Tpp_, Tttp_, Ttpp_;
};

using GridPtr = std::shared_ptr<const SphereGrid>;

inline GridPtr make_grid(int L) { return std::make_shared<const SphereGrid>(L); }

// A scalar on S^2 held in dual form (grid samples + harmonic coefficients,
// kept consistent at construction). Products are formed on the grid; the
// coefficient form is the band-limited projection.
class SphereField {
  public:
    static SphereField from_values(GridPtr g, VectorXd v) {
        SphereField f;
        f.grid_ = std::move(g);
        f.vals_ = std::move(v);
        if (f.vals_.size() != f.grid_->nnodes())
            throw std::invalid_argument("SphereField: node-count mismatch");
        f.cfs_ = f.grid_->analyze(f.vals_);
        return f;
    }

    static SphereField from_coeffs(GridPtr g, VectorXd c) {
        SphereField f;
        f.grid_ = std::move(g);
        f.cfs_ = std::move(c);
        f.vals_ = f.grid_->synthesize(f.cfs_);
        return f;
    }

    const GridPtr& grid() const { return grid_; }
    const VectorXd& values() const { return vals_; }
    const VectorXd& coeffs() const { return cfs_; }

    double mean() const { return grid_->integrate(vals_) / (4.0 * M_PI); }

    SphereField mean_free() const {
        VectorXd c = cfs_;
        c[0] = 0.0;
        return from_coeffs(grid_, std::move(c));
    }

  private:
    GridPtr grid_;
    VectorXd vals_, cfs_;
};

inline SphereField zero_field(GridPtr g) {
    VectorXd c = VectorXd::Zero(g->ncoef());
    return SphereField::from_coeffs(std::move(g), std::move(c));
}

inline VectorXd analyze(const SphereGrid& grid, const VectorXd& values) {
    return grid.analyze(values);
}
inline VectorXd synthesize(const SphereGrid& grid, const VectorXd& coeffs) {
    return grid.synthesize(coeffs);
}

// Multiplies coefficient (l, k) by -l(l+1).
inline SphereField laplace0(const SphereField& f) {
    const int L = f.grid()->max_degree();
    VectorXd c = f.coeffs();
    for (int l = 0; l <= L; ++l)
        for (int m = -l; m <= l; ++m) c[sh_index(l, m)] *= -double(l) * (l + 1);
    return SphereField::from_coeffs(f.grid(), std::move(c));
}

// g_0-gradient in the orthonormal frame {e_theta, e_phi}.
inline std::pair<SphereField, SphereField> grad0(const SphereField& f) {
    const auto& g = *f.grid();
    auto jet = g.synth_jet(f.coeffs());
    VectorXd a = jet.t, b(g.nnodes());
    for (int n = 0; n < g.nnodes(); ++n) b[n] = jet.p[n] / g.sin_theta(n);
    return {SphereField::from_values(f.grid(), std::move(a)),
            SphereField::from_values(f.grid(), std::move(b))};
}

// Second covariant derivative on (S^2, g_0), orthonormal-frame components
// (H_11, H_12, H_22). trace = laplace0.
inline std::array<SphereField, 3> hessian0(const SphereField& f) {
    const auto& g = *f.grid();
    auto jet = g.synth_jet(f.coeffs());
    VectorXd h11(g.nnodes()), h12(g.nnodes()), h22(g.nnodes());
    for (int n = 0; n < g.nnodes(); ++n) {
        const double st = g.sin_theta(n);
        const double ct = std::cos(g.theta(n));
        const double cot = ct / st;
        h11[n] = jet.tt[n];
        h12[n] = (jet.tp[n] - cot * jet.p[n]) / st;
        h22[n] = jet.pp[n] / (st * st) + cot * jet.t[n];
    }
    return {SphereField::from_values(f.grid(), std::move(h11)),
            SphereField::from_values(f.grid(), std::move(h12)),
            SphereField::from_values(f.grid(), std::move(h22))};
}

inline double integrate(const SphereGrid& grid, const VectorXd& values) {
    return grid.integrate(values);
}
inline double integrate(const SphereField& f) { return f.grid()->integrate(f.values()); }
inline double integrate(const SphereField& f, const SphereField& weight) {
    return f.grid()->integrate(f.values(), weight.values());
}

// Deterministic band-limited test field (used by property-style tests).
inline SphereField random_band_limited(GridPtr g, unsigned seed, int lmax = -1) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> N(0.0, 1.0);
    const int L = (lmax < 0) ? g->max_degree() : lmax;
    VectorXd c = VectorXd::Zero(g->ncoef());
    for (int l = 0; l <= L; ++l)
        for (int m = -l; m <= l; ++m) c[sh_index(l, m)] = N(rng) / (1.0 + l * l);
    return SphereField::from_coeffs(std::move(g), std::move(c));
}

}  // namespace sadsfol
