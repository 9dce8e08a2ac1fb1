#pragma once

// Time-parametrized Gaussian paths and their continuity-equation velocity
// fields.  Two kinds:
//   Linear   - mean and covariance interpolated affinely (the surrogate path),
//   Geodesic - Bures-Wasserstein displacement interpolation driven by the
//              optimal Gaussian map M.
// Also: the kinetic-action quadrature and the finite-difference continuity
// residual probe used by the test suite.

#include <cmath>
#include <optional>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "gmmflow/errors.hpp"
#include "gmmflow/gaussian.hpp"
#include "gmmflow/quadrature.hpp"
#include "gmmflow/spd.hpp"

namespace gmmflow {

enum class PathKind { Linear, Geodesic };

namespace detail {

inline void check_time(double t, const char* who) {
    if (!(t >= 0.0 && t <= 1.0))
        throw OutOfRange(std::string(who) + ": t = " + std::to_string(t) +
                         " outside [0,1]");
}

} // namespace detail

// Velocity field snapshot at a fixed time: v(x) = drift + gain (x - center).
struct AffineField {
    VectorXd drift;
    MatrixXd gain;
    VectorXd center;

    VectorXd value(const VectorXd& x) const { return drift + gain * (x - center); }
    double divergence() const { return gain.trace(); }
};

class GaussianPath {
public:
    static GaussianPath linear(Gaussian src, Gaussian dst) {
        detail::check_pair_dims(src, dst, "GaussianPath::linear");
        return GaussianPath(PathKind::Linear, std::move(src), std::move(dst), std::nullopt);
    }

    static GaussianPath geodesic(Gaussian src, Gaussian dst) {
        detail::check_pair_dims(src, dst, "GaussianPath::geodesic");
        SpdMatrix m = ot_map(src, dst).linear;
        return GaussianPath(PathKind::Geodesic, std::move(src), std::move(dst), std::move(m));
    }

    PathKind kind() const { return kind_; }
    const Gaussian& src() const { return src_; }
    const Gaussian& dst() const { return dst_; }
    int dim() const { return src_.dim(); }

    // Optimal map matrix (Geodesic kind only).
    const SpdMatrix& map_matrix() const {
        if (!map_) throw Error("GaussianPath: no map matrix on a Linear path");
        return *map_;
    }

    // A(t) = (1-t) I + t M, through M's spectrum so A stays exactly SPD.
    SpdMatrix interpolator(double t) const {
        const SpdMatrix& m = map_matrix();
        return SpdMatrix::from_spectrum(
            m.eigenvectors(),
            ((1.0 - t) + t * m.eigenvalues().array()).matrix());
    }

private:
    GaussianPath(PathKind kind, Gaussian src, Gaussian dst, std::optional<SpdMatrix> map)
        : kind_(kind), src_(std::move(src)), dst_(std::move(dst)), map_(std::move(map)) {}

    PathKind kind_;
    Gaussian src_;
    Gaussian dst_;
    std::optional<SpdMatrix> map_; // Geodesic only
};

inline Gaussian path_at(const GaussianPath& path, double t) {
    detail::check_time(t, "path_at");
    VectorXd mean = (1.0 - t) * path.src().mean + t * path.dst().mean;
    if (path.kind() == PathKind::Linear) {
        MatrixXd cov =
            (1.0 - t) * path.src().cov.entries() + t * path.dst().cov.entries();
        return Gaussian(std::move(mean), SpdMatrix(std::move(cov)));
    }
    const MatrixXd a = path.interpolator(t).entries();
    return Gaussian(std::move(mean),
                    SpdMatrix(detail::symmetrized(a * path.src().cov.entries() * a)));
}

inline AffineField affine_field_at(const GaussianPath& path, double t) {
    detail::check_time(t, "affine_field_at");
    AffineField f;
    f.drift = path.dst().mean - path.src().mean;
    f.center = (1.0 - t) * path.src().mean + t * path.dst().mean;
    if (path.kind() == PathKind::Linear) {
        const Gaussian g = path_at(path, t);
        const MatrixXd delta = path.dst().cov.entries() - path.src().cov.entries();
        // B(t) = (1/2) Delta Sigma(t)^{-1}; Sigma(t)^{-1} Delta is its transpose.
        f.gain = 0.5 * g.cov.solve(delta).transpose();
    } else {
        // B(t) = (M - I) A(t)^{-1}; shares M's eigenbasis.
        const SpdMatrix& m = path.map_matrix();
        const VectorXd gain_eigs =
            ((m.eigenvalues().array() - 1.0) /
             ((1.0 - t) + t * m.eigenvalues().array()))
                .matrix();
        f.gain = m.eigenvectors() * gain_eigs.asDiagonal() * m.eigenvectors().transpose();
    }
    return f;
}

inline VectorXd field_at(const GaussianPath& path, double t, const VectorXd& x) {
    return affine_field_at(path, t).value(x);
}

// Gauss-Legendre approximation of the kinetic action
//   int_0^1 ( ||a(t)||^2 + Tr(B(t) Sigma(t) B(t)') ) dt.
inline double kinetic_action(const GaussianPath& path, int quad_nodes) {
    if (quad_nodes < 1)
        throw ValidationError("kinetic_action: quad_nodes must be >= 1");
    const GaussLegendreRule rule = gauss_legendre(quad_nodes);
    double total = 0.0;
    for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
        const double t = rule.nodes[k];
        const AffineField f = affine_field_at(path, t);
        const Gaussian g = path_at(path, t);
        const double energy = f.drift.squaredNorm() +
                              (f.gain * g.cov.entries() * f.gain.transpose()).trace();
        total += rule.weights[k] * energy;
    }
    return total;
}

// Log-form continuity-equation residual
//   | d/dt log rho + div v + <grad log rho, v> |
// with the time derivative by central difference (step h) and the space
// terms analytic.  Zero for exact fields up to finite-difference error.
inline double continuity_residual(const GaussianPath& path, double t, const VectorXd& x,
                                  double h) {
    if (!(h > 0.0)) throw ValidationError("continuity_residual: h must be positive");
    if (!(t - h >= 0.0 && t + h <= 1.0))
        throw OutOfRange("continuity_residual: t +/- h leaves [0,1]");
    const double lp = log_density(path_at(path, t + h), x);
    const double lm = log_density(path_at(path, t - h), x);
    const double dt_log_rho = (lp - lm) / (2.0 * h);
    const Gaussian g = path_at(path, t);
    const AffineField f = affine_field_at(path, t);
    const VectorXd grad_log_rho = -g.cov.solve(VectorXd(x - g.mean));
    return std::abs(dt_log_rho + f.divergence() + grad_log_rho.dot(f.value(x)));
}

// Default step resolution for the Linear-kind flow-map ODE over [0,1].
inline constexpr int kFlowMapSteps = 1000;

// Flow map of the affine field as (Phi, offset): x -> Phi x + offset, i.e.
// x -> mu(t) + Phi(t) (x - mu0).  Geodesic: Phi(t) = A(t) analytically.
// Linear: Phi solves Phi' = B(t) Phi by RK4 on a uniform grid.
inline std::pair<MatrixXd, VectorXd> flow_map(const GaussianPath& path, double t,
                                              int steps_per_unit = kFlowMapSteps) {
    detail::check_time(t, "flow_map");
    const int d = path.dim();
    MatrixXd phi = MatrixXd::Identity(d, d);
    if (path.kind() == PathKind::Geodesic) {
        phi = path.interpolator(t).entries();
    } else if (t > 0.0) {
        const int n = std::max(1, static_cast<int>(std::ceil(steps_per_unit * t)));
        const double h = t / n;
        const auto gain = [&path](double s) { return affine_field_at(path, s).gain; };
        for (int k = 0; k < n; ++k) {
            const double s = k * h;
            const MatrixXd b0 = gain(s);
            const MatrixXd bm = gain(s + 0.5 * h);
            const MatrixXd b1 = gain(s + h);
            const MatrixXd k1 = b0 * phi;
            const MatrixXd k2 = bm * (phi + 0.5 * h * k1);
            const MatrixXd k3 = bm * (phi + 0.5 * h * k2);
            const MatrixXd k4 = b1 * (phi + h * k3);
            phi += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
    }
    const VectorXd mean_t = (1.0 - t) * path.src().mean + t * path.dst().mean;
    return {phi, mean_t - phi * path.src().mean};
}

} // namespace gmmflow
