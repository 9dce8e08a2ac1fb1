#pragma once

// Costs and maps for a single Gaussian component pair: the closed-form
// surrogate transport cost (kinetic action of the linear-interpolation path),
// the exact squared Bures-Wasserstein distance, the quadratic proxy shared by
// both local expansions, and the optimal affine transport map.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Dense>

#include "gmmflow/errors.hpp"
#include "gmmflow/spd.hpp"

namespace gmmflow {

struct Gaussian {
    VectorXd mean;
    SpdMatrix cov;

    Gaussian(VectorXd mean_, SpdMatrix cov_) : mean(std::move(mean_)), cov(std::move(cov_)) {
        if (mean.size() != cov.dim())
            throw ValidationError("Gaussian: mean length " + std::to_string(mean.size()) +
                                  " does not match covariance dim " + std::to_string(cov.dim()));
    }

    int dim() const { return cov.dim(); }
};

inline double log_density(const Gaussian& g, const VectorXd& x) {
    const VectorXd y = x - g.mean;
    return -0.5 * (g.dim() * std::log(2.0 * std::numbers::pi) + g.cov.log_det() +
                   g.cov.inv_quadratic_form(y));
}

inline double density(const Gaussian& g, const VectorXd& x) {
    return std::exp(log_density(g, x));
}

namespace detail {

inline void check_pair_dims(const Gaussian& src, const Gaussian& dst, const char* who) {
    if (src.dim() != dst.dim())
        throw ValidationError(std::string(who) + ": dimension mismatch (" +
                              std::to_string(src.dim()) + " vs " + std::to_string(dst.dim()) + ")");
}

// Snaps a tiny negative round-off result of a mathematically nonnegative
// quantity to zero; larger negatives are left alone so tests can see them.
inline double clamp_roundoff(double v, double scale) {
    if (v < 0.0 && v > -1e-9 * std::max(1.0, scale)) return 0.0;
    return v;
}

} // namespace detail

// Kinetic action of the linear Gaussian path, in closed form:
//   C = ||dmu||^2 + (1/4) Tr(phi(C0) C0 Sigma0 C0),
// with C0 the whitened perturbation.  The trace is evaluated in the
// eigenbasis of C0: Tr(phi(C0) C0 Sigma0 C0) = sum_k phi(l_k) l_k^2 v_k' Sigma0 v_k.
inline double surrogate_cost(const Gaussian& src, const Gaussian& dst) {
    detail::check_pair_dims(src, dst, "surrogate_cost");
    const MatrixXd& sigma0 = src.cov.entries();
    const MatrixXd sm = sym_inv_sqrt(src.cov).entries();
    const MatrixXd delta = dst.cov.entries() - sigma0;
    const MatrixXd c0 = detail::symmetrized(sm * delta * sm);
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(c0);
    if (es.info() != Eigen::Success)
        throw NumericalError("surrogate_cost: eigendecomposition of C0 failed");
    const VectorXd& lam = es.eigenvalues();
    if (lam(0) <= -1.0)
        throw DomainError("surrogate_cost: eigenvalue of C0 at or below -1 "
                          "(endpoints are not both SPD)");
    const MatrixXd sv = sigma0 * es.eigenvectors();
    double cov_term = 0.0;
    for (Eigen::Index k = 0; k < lam.size(); ++k) {
        const double q = es.eigenvectors().col(k).dot(sv.col(k));
        cov_term += phi(lam(k)) * lam(k) * lam(k) * q;
    }
    cov_term *= 0.25;
    const double value = (dst.mean - src.mean).squaredNorm() + cov_term;
    return detail::clamp_roundoff(value, std::abs(value));
}

// Exact squared 2-Wasserstein distance between Gaussians:
//   ||dmu||^2 + Tr Sigma0 + Tr Sigma1 - 2 Tr((Sigma0^{1/2} Sigma1 Sigma0^{1/2})^{1/2}).
inline double w2_squared(const Gaussian& src, const Gaussian& dst) {
    detail::check_pair_dims(src, dst, "w2_squared");
    const MatrixXd s = sym_sqrt(src.cov).entries();
    const SpdMatrix inner(detail::symmetrized(s * dst.cov.entries() * s));
    const double cov_term =
        src.cov.trace() + dst.cov.trace() - 2.0 * sym_sqrt(inner).trace();
    const double scale = src.cov.trace() + dst.cov.trace();
    const double value = (dst.mean - src.mean).squaredNorm() + detail::clamp_roundoff(cov_term, scale);
    return detail::clamp_roundoff(value, scale);
}

// Shared second-order term of both cost expansions: (1/4) Tr(D Sigma0^{-1} D).
inline double quadratic_proxy(const Gaussian& src, const Gaussian& dst) {
    detail::check_pair_dims(src, dst, "quadratic_proxy");
    const MatrixXd delta = dst.cov.entries() - src.cov.entries();
    return 0.25 * delta.cwiseProduct(src.cov.solve(delta)).sum();
}

// Optimal Gaussian transport map T(x) = mu1 + M (x - mu0), stored as
// x -> linear * x + shift.  M is SPD and satisfies M Sigma0 M = Sigma1.
struct OtMap {
    SpdMatrix linear;
    VectorXd shift;

    VectorXd apply(const VectorXd& x) const { return linear.entries() * x + shift; }
};

inline OtMap ot_map(const Gaussian& src, const Gaussian& dst) {
    detail::check_pair_dims(src, dst, "ot_map");
    const MatrixXd s = sym_sqrt(src.cov).entries();
    const MatrixXd sm = sym_inv_sqrt(src.cov).entries();
    const SpdMatrix inner(detail::symmetrized(s * dst.cov.entries() * s));
    SpdMatrix m(detail::symmetrized(sm * sym_sqrt(inner).entries() * sm));
    VectorXd shift = dst.mean - m.entries() * src.mean;
    return OtMap{std::move(m), std::move(shift)};
}

// All pairwise costs in one record.  gap = surrogate - w2 is reported signed;
// feasibility makes it nonnegative up to round-off.
struct PairCostReport {
    double mean_term = 0.0;
    double surrogate_cov_term = 0.0;
    double w2_cov_term = 0.0;
    double surrogate_total = 0.0;
    double w2_total = 0.0;
    double quadratic_proxy = 0.0;
    double gap = 0.0;
};

inline PairCostReport pair_report(const Gaussian& src, const Gaussian& dst) {
    detail::check_pair_dims(src, dst, "pair_report");
    PairCostReport r;
    r.mean_term = (dst.mean - src.mean).squaredNorm();
    r.surrogate_total = surrogate_cost(src, dst);
    r.w2_total = w2_squared(src, dst);
    r.surrogate_cov_term = r.surrogate_total - r.mean_term;
    r.w2_cov_term = r.w2_total - r.mean_term;
    r.quadratic_proxy = gmmflow::quadratic_proxy(src, dst);
    r.gap = r.surrogate_total - r.w2_total;
    return r;
}

} // namespace gmmflow
