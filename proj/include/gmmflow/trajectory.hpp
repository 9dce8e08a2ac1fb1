#pragma once

// Particle sampling from the source mixture and deterministic RK4 transport
// under the global velocity field, with endpoint pushforward checks.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gmmflow/errors.hpp"
#include "gmmflow/mixture.hpp"
#include "gmmflow/rng.hpp"

namespace gmmflow {

struct ParticleSet {
    MatrixXd positions; // N x d
    std::vector<int> source_component;
    std::uint64_t rng_seed = 0;

    int count() const { return static_cast<int>(positions.rows()); }
    int dim() const { return static_cast<int>(positions.cols()); }
};

struct IntegratorConfig {
    int steps = 100; // uniform RK4 steps over [0,1]
};

// i.i.d. draws from the mixture: component index from the weights, then a
// Gaussian draw through the symmetric covariance square root.  Each particle
// uses its own (seed, index) stream.
inline ParticleSet sample_source(const Gmm& gmm, int n, std::uint64_t seed) {
    if (n < 1) throw ValidationError("sample_source: n must be >= 1");
    ParticleSet out;
    out.rng_seed = seed;
    out.positions.resize(n, gmm.dim());
    out.source_component.resize(static_cast<std::size_t>(n));
    for (int p = 0; p < n; ++p) {
        RngStream rng(seed, static_cast<std::uint64_t>(p));
        const double u = rng.next_uniform();
        int comp = gmm.size() - 1;
        double cdf = 0.0;
        for (int i = 0; i < gmm.size(); ++i) {
            cdf += gmm.weights()(i);
            if (u <= cdf) {
                comp = i;
                break;
            }
        }
        const Gaussian& g = gmm.component(comp);
        const VectorXd z = rng.next_normal_vector(gmm.dim());
        VectorXd y = g.cov.eigenvectors().transpose() * z;
        y.array() *= g.cov.eigenvalues().array().sqrt();
        out.positions.row(p) = (g.mean + g.cov.eigenvectors() * y).transpose();
        out.source_component[static_cast<std::size_t>(p)] = comp;
    }
    return out;
}

struct IntegrationResult {
    ParticleSet particles; // state at t = 1
    std::vector<double> snapshot_times;
    std::vector<MatrixXd> snapshots;
};

// Classical RK4 on dx/dt = u(t, x) with uniform steps.  Pair fields are
// frozen once per stage time and shared across particles; each distinct time
// gets a fresh factorization.  Snapshot requests are rounded to the grid.
inline IntegrationResult integrate(const MixtureFlow& flow, const ParticleSet& particles,
                                   const IntegratorConfig& cfg = {},
                                   const std::vector<double>& snapshot_times = {}) {
    if (cfg.steps < 1) throw ValidationError("integrate: steps must be >= 1");
    if (particles.dim() != flow.dim())
        throw ValidationError("integrate: particle dim does not match flow dim");
    const int steps = cfg.steps;
    const double h = 1.0 / steps;

    // Stage grid: index 2k holds t_k, index 2k+1 holds t_k + h/2.
    std::vector<FlowSnapshot> stage(2 * static_cast<std::size_t>(steps) + 1);
    for (int k = 0; k <= steps; ++k) stage[2 * static_cast<std::size_t>(k)] =
        flow_snapshot(flow, std::min(1.0, k * h));
    for (int k = 0; k < steps; ++k)
        stage[2 * static_cast<std::size_t>(k) + 1] = flow_snapshot(flow, (k + 0.5) * h);

    std::vector<int> snap_steps;
    for (double t : snapshot_times) {
        detail::check_time(t, "integrate snapshot");
        snap_steps.push_back(static_cast<int>(std::lround(t * steps)));
    }

    IntegrationResult result;
    result.particles = particles;
    MatrixXd& x = result.particles.positions;
    const int n = particles.count();

    auto record = [&](int k) {
        for (std::size_t s = 0; s < snap_steps.size(); ++s)
            if (snap_steps[s] == k) {
                result.snapshot_times.push_back(k * h);
                result.snapshots.push_back(x);
            }
    };
    record(0);

    VectorXd xi, k1, k2, k3, k4;
    for (int k = 0; k < steps; ++k) {
        const FlowSnapshot& s0 = stage[2 * static_cast<std::size_t>(k)];
        const FlowSnapshot& sm = stage[2 * static_cast<std::size_t>(k) + 1];
        const FlowSnapshot& s1 = stage[2 * static_cast<std::size_t>(k) + 2];
        for (int p = 0; p < n; ++p) {
            xi = x.row(p).transpose();
            k1 = s0.velocity(xi);
            k2 = sm.velocity(xi + 0.5 * h * k1);
            k3 = sm.velocity(xi + 0.5 * h * k2);
            k4 = s1.velocity(xi + h * k3);
            xi += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            if (!xi.allFinite())
                throw NonFiniteState("integrate: particle " + std::to_string(p) +
                                     " became non-finite at step " + std::to_string(k));
            x.row(p) = xi.transpose();
        }
        record(k + 1);
    }
    return result;
}

struct PushforwardReport {
    double mean_err = 0.0; // pi-weighted per-pair endpoint mean error
    double cov_err = 0.0;  // pi-weighted per-pair relative covariance error
    double w2_to_target_estimate = 0.0; // sliced-W2 distance to fresh target samples
};

namespace detail {

// Sliced 2-Wasserstein distance estimate between two equally sized clouds:
// average the squared 1D W2 over random directions, take the square root.
inline double sliced_w2(const MatrixXd& xs, const MatrixXd& ys, std::uint64_t seed,
                        int directions = 64) {
    const int n = static_cast<int>(xs.rows());
    const int d = static_cast<int>(xs.cols());
    RngStream rng(seed, 0);
    double total = 0.0;
    std::vector<double> px(static_cast<std::size_t>(n)), py(static_cast<std::size_t>(n));
    for (int l = 0; l < directions; ++l) {
        VectorXd dir = rng.next_normal_vector(d);
        dir.normalize();
        for (int i = 0; i < n; ++i) {
            px[static_cast<std::size_t>(i)] = xs.row(i).dot(dir);
            py[static_cast<std::size_t>(i)] = ys.row(i).dot(dir);
        }
        std::sort(px.begin(), px.end());
        std::sort(py.begin(), py.end());
        double acc = 0.0;
        for (int i = 0; i < n; ++i) {
            const double diff = px[static_cast<std::size_t>(i)] - py[static_cast<std::size_t>(i)];
            acc += diff * diff;
        }
        total += acc / n;
    }
    return std::sqrt(total / directions);
}

} // namespace detail

// Integrates n source samples to t = 1 and compares them with the coupled
// endpoint mixture sum_ij pi_ij N(mu_j, Sigma_j).  Moment errors are computed
// per pair under the endpoint responsibilities and averaged with the empirical
// pair masses; for a single pair this is a plain comparison against
// (mu_1, Sigma_1).
inline PushforwardReport pushforward_check(const MixtureFlow& flow, int n,
                                           std::uint64_t seed,
                                           const IntegratorConfig& cfg = {}) {
    // Source mixture reconstructed from the flow's pair paths (row marginals).
    const int k0 = flow.k0, k1 = flow.k1;
    VectorXd a = flow.coupling.plan.rowwise().sum();
    a /= a.sum();
    std::vector<Gaussian> src_comps;
    src_comps.reserve(static_cast<std::size_t>(k0));
    for (int i = 0; i < k0; ++i) src_comps.push_back(flow.path(i, 0).src());
    const Gmm src(a, src_comps);

    const ParticleSet start = sample_source(src, n, seed);
    const IntegrationResult res = integrate(flow, start, cfg);
    const MatrixXd& x = res.particles.positions;
    const int d = flow.dim();

    // Per-pair weighted moments under endpoint responsibilities.
    const FlowSnapshot end = flow_snapshot(flow, 1.0);
    const std::size_t npairs = end.pairs.size();
    std::vector<double> wsum(npairs, 0.0);
    std::vector<VectorXd> wx(npairs, VectorXd::Zero(d));
    std::vector<MatrixXd> wxx(npairs, MatrixXd::Zero(d, d));
    for (int p = 0; p < n; ++p) {
        const VectorXd xi = x.row(p).transpose();
        const VectorXd gamma = end.responsibilities(xi);
        for (std::size_t q = 0; q < npairs; ++q) {
            const double w = gamma(static_cast<Eigen::Index>(q));
            if (w == 0.0) continue;
            wsum[q] += w;
            wx[q] += w * xi;
            wxx[q] += w * (xi * xi.transpose());
        }
    }

    PushforwardReport report;
    for (int i = 0; i < k0; ++i)
        for (int j = 0; j < k1; ++j) {
            const std::size_t q = static_cast<std::size_t>(i) * static_cast<std::size_t>(k1) +
                                  static_cast<std::size_t>(j);
            if (wsum[q] <= 0.0) continue;
            const double mass = wsum[q] / n;
            const VectorXd m_hat = wx[q] / wsum[q];
            const MatrixXd c_hat = wxx[q] / wsum[q] - m_hat * m_hat.transpose();
            const Gaussian& target = flow.path(i, j).dst();
            report.mean_err += mass * (m_hat - target.mean).norm();
            report.cov_err += mass * (c_hat - target.cov.entries()).norm() /
                              target.cov.entries().norm();
        }

    // Fresh draws from the pi-induced endpoint mixture for the sliced-W2 probe.
    VectorXd b = flow.coupling.plan.colwise().sum().transpose();
    b /= b.sum();
    std::vector<Gaussian> dst_comps;
    dst_comps.reserve(static_cast<std::size_t>(k1));
    for (int j = 0; j < k1; ++j) dst_comps.push_back(flow.path(0, j).dst());
    const Gmm target_mix(b, dst_comps);
    const ParticleSet target_samples = sample_source(target_mix, n, seed ^ 0x5DEECE66Dull);
    report.w2_to_target_estimate =
        detail::sliced_w2(x, target_samples.positions, seed ^ 0xBADC0FFEEull);
    return report;
}

} // namespace gmmflow
