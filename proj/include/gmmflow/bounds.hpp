#pragma once

// Explicit cubic gap bound between the surrogate cost and the exact Gaussian
// Wasserstein cost, and the path-splitting machinery that restores locality
// (rho_hat_k < 1) segment by segment when the one-shot bound does not apply.

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gmmflow/errors.hpp"
#include "gmmflow/gaussian.hpp"
#include "gmmflow/spd.hpp"

namespace gmmflow {

// A commutator below this is treated as exactly commuting.
inline constexpr double kCommutingTol = 1e-10;
// Grid resolution for the uniform eigenvalue floor in min_segments.
inline constexpr int kMinSegmentsGrid = 64;
// The grid minimum is shrunk by this factor before use as the floor.
inline constexpr double kFloorSafety = 0.99;

// Remainder constants of the cubic gap bound:
//   b_c = (3d/4) M0 / (m0^3 (1 - rho))
//   b_w = 16 sqrt(2) d M0^6 (1 + rho)^{3/2} / (m0^8 (1 - rho)^4)
// Valid only under the locality condition rho < 1.
inline std::pair<double, double> bound_constants(const SpdMatrix& sigma0, double rho_hat) {
    if (!(rho_hat < 1.0))
        throw LocalityViolated("bound_constants: rho_hat = " + std::to_string(rho_hat) +
                               " >= 1");
    const double d = static_cast<double>(sigma0.dim());
    const double m0 = sigma0.lambda_min();
    const double big_m0 = sigma0.lambda_max();
    const double b_c = 0.75 * d * big_m0 / (std::pow(m0, 3) * (1.0 - rho_hat));
    const double b_w = 16.0 * std::sqrt(2.0) * d * std::pow(big_m0, 6) *
                       std::pow(1.0 + rho_hat, 1.5) /
                       (std::pow(m0, 8) * std::pow(1.0 - rho_hat, 4));
    return {b_c, b_w};
}

// |C - W2^2| <= (b_c + b_w) ||DeltaSigma||^3 whenever rho_hat < 1 and the pair
// commutes.  Invalidity (rho_hat >= 1) is encoded in the result, not thrown;
// invalid bounds carry no numeric values.  The commuting flag records whether
// dominance is actually guaranteed by the theorem hypothesis.
struct GapBound {
    double rho_hat = 0.0;
    double delta_norm = 0.0;
    bool valid = false;     // rho_hat < 1 (strict)
    bool commuting = false; // comm < kCommutingTol
    std::optional<double> b_c;
    std::optional<double> b_w;
    std::optional<double> bound_value; // (b_c + b_w) * delta_norm^3
};

inline GapBound cubic_gap_bound(const Gaussian& src, const Gaussian& dst) {
    detail::check_pair_dims(src, dst, "cubic_gap_bound");
    const SymMatrix delta(dst.cov.entries() - src.cov.entries());
    const WhitenedPerturbation wp = whitened_perturbation(src.cov, delta);
    const RegimeIndicators ind = regime_indicators(src.cov, delta);
    GapBound out;
    out.rho_hat = wp.rho_hat;
    out.delta_norm = ind.delta_norm;
    out.valid = wp.rho_hat < 1.0;
    out.commuting = ind.comm < kCommutingTol;
    if (out.valid) {
        const auto [b_c, b_w] = bound_constants(src.cov, wp.rho_hat);
        out.b_c = b_c;
        out.b_w = b_w;
        out.bound_value = (b_c + b_w) * std::pow(ind.delta_norm, 3);
    }
    return out;
}

// Uniform subdivision of the covariance displacement into n equal increments,
// with means interpolated at the same knots.  Segment k runs from checkpoint
// k to checkpoint k+1 and carries its own whitened perturbation and bound.
struct SplitPlan {
    int n_segments = 0;
    std::vector<Gaussian> checkpoints; // n+1 entries
    std::vector<GapBound> per_segment; // n entries; rho_hat is rho_k
};

inline SplitPlan split_path(const Gaussian& src, const Gaussian& dst, int n) {
    detail::check_pair_dims(src, dst, "split_path");
    if (n < 1) throw ValidationError("split_path: n must be >= 1");
    SplitPlan plan;
    plan.n_segments = n;
    plan.checkpoints.reserve(static_cast<std::size_t>(n) + 1);
    const MatrixXd delta = dst.cov.entries() - src.cov.entries();
    for (int k = 0; k <= n; ++k) {
        const double s = static_cast<double>(k) / n;
        VectorXd mean = (1.0 - s) * src.mean + s * dst.mean;
        // Convexity of the SPD cone keeps every checkpoint SPD.
        plan.checkpoints.emplace_back(std::move(mean),
                                      SpdMatrix(src.cov.entries() + s * delta));
    }
    plan.per_segment.reserve(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k)
        plan.per_segment.push_back(
            cubic_gap_bound(plan.checkpoints[static_cast<std::size_t>(k)],
                            plan.checkpoints[static_cast<std::size_t>(k) + 1]));
    return plan;
}

// Smallest N with N > ||DeltaSigma|| / m where m is a uniform eigenvalue
// floor along the subdivided path, estimated as the minimum of
// lambda_min(Sigma0 + s Delta) over a uniform grid and shrunk by kFloorSafety.
// Such an N guarantees rho_k < 1 on every segment.
inline int min_segments(const Gaussian& src, const Gaussian& dst) {
    detail::check_pair_dims(src, dst, "min_segments");
    const MatrixXd delta = dst.cov.entries() - src.cov.entries();
    const double delta_norm = spectral_norm(SymMatrix(delta));
    if (delta_norm == 0.0) return 1;
    double floor = std::numeric_limits<double>::infinity();
    for (int i = 0; i < kMinSegmentsGrid; ++i) {
        const double s = static_cast<double>(i) / (kMinSegmentsGrid - 1);
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(
            src.cov.entries() + s * delta, Eigen::EigenvaluesOnly);
        const double lmin = es.eigenvalues()(0);
        if (!(lmin > 0.0))
            throw NotSpd("min_segments: grid covariance at s = " + std::to_string(s) +
                         " is not SPD");
        floor = std::min(floor, lmin);
    }
    floor *= kFloorSafety;
    return static_cast<int>(std::floor(delta_norm / floor)) + 1;
}

struct SegmentBoundSum {
    std::optional<double> total;       // present only if every segment is valid
    std::vector<int> invalid_segments; // offending segment indices
};

// Sum of the per-segment cubic bounds, equal to
//   (||DeltaSigma||^3 / N^3) * sum_k (b_c^k + b_w^k).
inline SegmentBoundSum segmentwise_bound_sum(const SplitPlan& plan) {
    SegmentBoundSum out;
    double total = 0.0;
    for (int k = 0; k < plan.n_segments; ++k) {
        const GapBound& b = plan.per_segment[static_cast<std::size_t>(k)];
        if (!b.valid) {
            out.invalid_segments.push_back(k);
        } else {
            total += *b.bound_value;
        }
    }
    if (out.invalid_segments.empty()) out.total = total;
    return out;
}

} // namespace gmmflow
