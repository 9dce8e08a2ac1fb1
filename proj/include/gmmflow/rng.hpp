#pragma once

// Deterministic randomness helpers.  Particle sampling uses per-particle
// streams keyed by (seed, particle index), so parallel or reordered sampling
// reproduces the same draws.  Gaussians come from an explicit Box-Muller so
// sequences do not depend on the standard library's distribution internals.

#include <cmath>
#include <cstdint>
#include <numbers>

#include <Eigen/Dense>

namespace gmmflow {

// SplitMix64 step; also the stream mixer.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// Counter-based stream: state fully determined by (seed, stream index).
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream) {
        state_ = seed;
        (void)splitmix64(state_);
        state_ ^= 0xD1B54A32D192ED03ull * (stream + 1);
        (void)splitmix64(state_);
    }

    std::uint64_t next_u64() { return splitmix64(state_); }

    // Uniform on (0,1).
    double next_uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller; draws are paired internally.
    double next_normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = next_uniform();
        const double u2 = next_uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    Eigen::VectorXd next_normal_vector(int dim) {
        Eigen::VectorXd z(dim);
        for (int i = 0; i < dim; ++i) z(i) = next_normal();
        return z;
    }

private:
    std::uint64_t state_ = 0;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// Haar-ish random orthogonal matrix: QR of a Gaussian matrix with the sign
// of diag(R) fixed, so the result is deterministic and well distributed.
inline Eigen::MatrixXd random_orthogonal(int dim, std::uint64_t seed) {
    RngStream rng(seed, 0);
    Eigen::MatrixXd m(dim, dim);
    for (int j = 0; j < dim; ++j)
        for (int i = 0; i < dim; ++i) m(i, j) = rng.next_normal();
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
    Eigen::MatrixXd q = qr.householderQ();
    const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int j = 0; j < dim; ++j)
        if (r(j, j) < 0.0) q.col(j) *= -1.0;
    return q;
}

} // namespace gmmflow
