#pragma once

// Shared test utilities: independent oracles, seeded generators, and the
// log-log slope fit used by the order-of-accuracy checks.

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "gmmflow/gmmflow.hpp"

namespace testutil {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using namespace gmmflow;

// Independent quadrature oracle for the surrogate cost,
//   ||dmu||^2 + (1/4) int_0^1 Tr(D Sigma(t)^{-1} D) dt,
// evaluated by Gauss-Legendre with Sigma(t)^{-1} from an LDLT solve on the
// raw entries.  Shares nothing with the closed-form evaluation path.
inline double surrogate_quadrature_oracle(const Gaussian& src, const Gaussian& dst,
                                          int nodes = 200) {
    const MatrixXd d = dst.cov.entries() - src.cov.entries();
    const GaussLegendreRule rule = gauss_legendre(nodes);
    double integral = 0.0;
    for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
        const double t = rule.nodes[k];
        const MatrixXd sigma_t =
            (1.0 - t) * src.cov.entries() + t * dst.cov.entries();
        const MatrixXd x = sigma_t.ldlt().solve(d);
        integral += rule.weights[k] * (d * x).trace();
    }
    return (dst.mean - src.mean).squaredNorm() + 0.25 * integral;
}

// Scalar W2^2 oracle for simultaneously diagonal pairs.
inline double diag_w2_oracle(const VectorXd& mu0, const VectorXd& lam0, const VectorXd& mu1,
                             const VectorXd& lam1) {
    double cov = 0.0;
    for (Eigen::Index k = 0; k < lam0.size(); ++k) {
        const double s = std::sqrt(lam0(k)) - std::sqrt(lam1(k));
        cov += s * s;
    }
    return (mu1 - mu0).squaredNorm() + cov;
}

inline SpdMatrix random_spd(int d, std::uint64_t seed, double spread = 2.0) {
    RngStream rng(seed, 1);
    const MatrixXd q = random_orthogonal(d, seed ^ 0x51ED270B);
    VectorXd lam(d);
    const double l = std::log(spread);
    for (int i = 0; i < d; ++i) lam(i) = std::exp((2.0 * rng.next_uniform() - 1.0) * l);
    return SpdMatrix(0.5 * (q * lam.asDiagonal() * q.transpose() +
                            (q * lam.asDiagonal() * q.transpose()).transpose()));
}

inline Gaussian random_gaussian(int d, std::uint64_t seed, double spread = 2.0,
                                double mean_scale = 1.0) {
    RngStream rng(seed, 2);
    return Gaussian(mean_scale * rng.next_normal_vector(d), random_spd(d, seed, spread));
}

inline std::pair<Gaussian, Gaussian> random_pair(int d, std::uint64_t seed,
                                                 double spread = 2.0,
                                                 double mean_scale = 1.0) {
    return {random_gaussian(d, seed * 2 + 1, spread, mean_scale),
            random_gaussian(d, seed * 2 + 2, spread, mean_scale)};
}

// Commuting pair: Sigma0 = Q diag(a) Q', Delta = eps * Q diag(g) Q' with
// a in [0.5, 2] and g in [0.3, 1] (positive, so the cubic remainder term
// cannot degenerate).  rho_hat = eps * max(g/a).
struct CommutingPair {
    Gaussian src;
    Gaussian dst;
    double rho_hat = 0.0;
};

inline CommutingPair commuting_pair(int d, std::uint64_t seed, double eps) {
    RngStream rng(seed, 3);
    const MatrixXd q = random_orthogonal(d, seed ^ 0xC0117EC7);
    VectorXd a(d), g(d);
    for (int i = 0; i < d; ++i) a(i) = 0.5 + 1.5 * rng.next_uniform();
    for (int i = 0; i < d; ++i) g(i) = 0.3 + 0.7 * rng.next_uniform();
    const VectorXd lam1 = a + eps * g;
    const VectorXd mu0 = rng.next_normal_vector(d);
    const VectorXd mu1 = mu0 + 0.5 * rng.next_normal_vector(d);
    CommutingPair out{
        Gaussian(mu0, SpdMatrix::from_spectrum(q, a)),
        Gaussian(mu1, SpdMatrix::from_spectrum(q, lam1)),
        (eps * g.array() / a.array()).abs().maxCoeff()};
    return out;
}

// Commuting pair with a prescribed rho_hat < 1 (Delta scaled so the largest
// whitened eigenvalue magnitude equals rho exactly).
inline CommutingPair commuting_pair_with_rho(int d, std::uint64_t seed, double rho) {
    RngStream rng(seed, 4);
    const MatrixXd q = random_orthogonal(d, seed ^ 0xBEA7ED);
    VectorXd a(d), z(d);
    for (int i = 0; i < d; ++i) a(i) = 0.5 + 1.5 * rng.next_uniform();
    for (int i = 0; i < d; ++i) z(i) = 2.0 * rng.next_uniform() - 1.0;
    z *= rho / z.cwiseAbs().maxCoeff();
    const VectorXd lam1 = (a.array() * (1.0 + z.array())).matrix();
    const VectorXd mu0 = rng.next_normal_vector(d);
    const VectorXd mu1 = mu0 + 0.3 * rng.next_normal_vector(d);
    return CommutingPair{Gaussian(mu0, SpdMatrix::from_spectrum(q, a)),
                         Gaussian(mu1, SpdMatrix::from_spectrum(q, lam1)), rho};
}

// Least-squares slope of log(y) against log(x).
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

} // namespace testutil
