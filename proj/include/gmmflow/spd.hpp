#pragma once

// Spectral calculus on symmetric / symmetric positive definite matrices:
// square roots, inverse square roots, scalar functions applied through the
// eigendecomposition, and the regime indicators (whitened perturbation size,
// condition number, normalized commutator) used throughout the library.
//
// Eigendecomposition is the single matrix-function backend.  SpdMatrix keeps
// its spectrum from construction on, so spectral functions of an existing
// matrix never re-factorize, and their results carry exact spectra.

#include <cmath>
#include <functional>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "gmmflow/errors.hpp"

namespace gmmflow {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Relative Frobenius tolerance for accepting nearly-symmetric input.
inline constexpr double kSymmetryTol = 1e-12;
// Positivity cutoff: construction fails when
// lambda_min <= 1e-12 * max(lambda_max, 1), which also gates out point-mass
// covariances at the 1e-12 scale.
inline constexpr double kSpdFloorFactor = 1e-12;
// Spectral reconstruction must match the entries to this relative error.
inline constexpr double kReconstructTol = 1e-10;
// Below this |z| the phi kernel switches to its truncated series.
inline constexpr double kPhiSwitch = 1e-4;

namespace detail {

inline void check_symmetric(const MatrixXd& m, const char* who) {
    if (m.rows() != m.cols())
        throw ValidationError(std::string(who) + ": matrix is not square");
    const double scale = m.norm();
    const double asym = (m - m.transpose()).norm();
    if (asym > kSymmetryTol * std::max(scale, 1e-300))
        throw ValidationError(std::string(who) + ": matrix is not symmetric (rel asymmetry " +
                              std::to_string(asym / std::max(scale, 1e-300)) + ")");
}

inline MatrixXd symmetrized(const MatrixXd& m) {
    return 0.5 * (m + m.transpose());
}

} // namespace detail

// Symmetric, possibly indefinite matrix.  Stored explicitly symmetrized.
class SymMatrix {
public:
    explicit SymMatrix(MatrixXd entries) {
        detail::check_symmetric(entries, "SymMatrix");
        entries_ = detail::symmetrized(entries);
    }

    static SymMatrix zero(int dim) { return SymMatrix(MatrixXd::Zero(dim, dim)); }

    int dim() const { return static_cast<int>(entries_.rows()); }
    const MatrixXd& entries() const { return entries_; }

private:
    MatrixXd entries_;
};

// Symmetric positive definite matrix with its spectral decomposition computed
// once at construction.  Immutable afterwards; safe to share across threads.
class SpdMatrix {
public:
    // Validating constructor: symmetry, strict positivity above the floor,
    // and a faithful spectral reconstruction are all enforced here.
    explicit SpdMatrix(MatrixXd entries) {
        detail::check_symmetric(entries, "SpdMatrix");
        entries_ = detail::symmetrized(entries);
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(entries_);
        if (es.info() != Eigen::Success)
            throw NotSpd("SpdMatrix: eigendecomposition failed");
        eigenvalues_ = es.eigenvalues();
        eigenvectors_ = es.eigenvectors();
        const double lmax = eigenvalues_(eigenvalues_.size() - 1);
        if (!(lmax > 0.0) || eigenvalues_(0) <= kSpdFloorFactor * std::max(lmax, 1.0))
            throw NotSpd("SpdMatrix: lambda_min " + std::to_string(eigenvalues_(0)) +
                         " at or below positivity floor");
        const MatrixXd rec = eigenvectors_ * eigenvalues_.asDiagonal() * eigenvectors_.transpose();
        if ((rec - entries_).norm() > kReconstructTol * entries_.norm())
            throw NotSpd("SpdMatrix: spectral reconstruction mismatch");
    }

    // Trusted constructor for spectral-function results whose decomposition is
    // known exactly: f(A) = V f(L) V^T reuses A's eigenvectors.
    static SpdMatrix from_spectrum(MatrixXd eigenvectors, VectorXd eigenvalues) {
        if (!(eigenvalues.minCoeff() > 0.0))
            throw NotSpd("SpdMatrix::from_spectrum: nonpositive eigenvalue");
        SpdMatrix out;
        out.entries_ = detail::symmetrized(
            eigenvectors * eigenvalues.asDiagonal() * eigenvectors.transpose());
        out.eigenvalues_ = std::move(eigenvalues);
        out.eigenvectors_ = std::move(eigenvectors);
        return out;
    }

    int dim() const { return static_cast<int>(entries_.rows()); }
    const MatrixXd& entries() const { return entries_; }
    const VectorXd& eigenvalues() const { return eigenvalues_; } // ascending
    const MatrixXd& eigenvectors() const { return eigenvectors_; }
    double lambda_min() const { return eigenvalues_(0); }
    double lambda_max() const { return eigenvalues_(eigenvalues_.size() - 1); }
    double trace() const { return entries_.trace(); }
    double log_det() const { return eigenvalues_.array().log().sum(); }

    // A^{-1} b through the cached spectrum.
    VectorXd solve(const VectorXd& b) const {
        return eigenvectors_ *
               ((eigenvectors_.transpose() * b).array() / eigenvalues_.array()).matrix();
    }

    MatrixXd solve(const MatrixXd& b) const {
        MatrixXd y = eigenvectors_.transpose() * b;
        y.array().colwise() /= eigenvalues_.array();
        return eigenvectors_ * y;
    }

    // x^T A^{-1} x, nonnegative by construction.
    double inv_quadratic_form(const VectorXd& x) const {
        const VectorXd y = eigenvectors_.transpose() * x;
        return (y.array().square() / eigenvalues_.array()).sum();
    }

private:
    SpdMatrix() = default;

    MatrixXd entries_;
    VectorXd eigenvalues_;
    MatrixXd eigenvectors_;
};

// phi(z) = log(1+z)/z with phi(0) = 1, defined on z > -1.  Near zero the
// direct quotient loses digits to cancellation, so a 5-term alternating
// series takes over below kPhiSwitch (series error < 1e-20 there).
inline double phi(double z) {
    if (z <= -1.0)
        throw DomainError("phi: z = " + std::to_string(z) + " is outside (-1, inf)");
    if (std::abs(z) < kPhiSwitch)
        return 1.0 - z / 2.0 + z * z / 3.0 - z * z * z / 4.0 + z * z * z * z / 5.0;
    return std::log1p(z) / z;
}

inline SpdMatrix sym_sqrt(const SpdMatrix& a) {
    return SpdMatrix::from_spectrum(a.eigenvectors(), a.eigenvalues().array().sqrt().matrix());
}

inline SpdMatrix sym_inv_sqrt(const SpdMatrix& a) {
    return SpdMatrix::from_spectrum(a.eigenvectors(),
                                    a.eigenvalues().array().rsqrt().matrix());
}

// V f(L) V^T for a scalar kernel f.  f is applied eigenvalue-wise and may
// throw DomainError.
template <typename F>
SymMatrix spectral_apply(const SymMatrix& a, F&& f) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(a.entries());
    if (es.info() != Eigen::Success)
        throw NumericalError("spectral_apply: eigendecomposition failed");
    VectorXd w(es.eigenvalues().size());
    for (Eigen::Index i = 0; i < w.size(); ++i)
        w(i) = f(es.eigenvalues()(i));
    return SymMatrix(
        es.eigenvectors() * w.asDiagonal() * es.eigenvectors().transpose());
}

// Exact spectral norm of a symmetric matrix (max |eigenvalue|).
inline double spectral_norm(const SymMatrix& a) {
    if (a.dim() == 0) return 0.0;
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(a.entries(), Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

struct WhitenedPerturbation {
    double rho_hat = 0.0; // || Sigma0^{-1/2} Delta Sigma0^{-1/2} ||
    SymMatrix c0;
};

// Whitened perturbation C0 = Sigma0^{-1/2} Delta Sigma0^{-1/2} and its
// spectral norm rho_hat, the locality parameter of the local expansions.
inline WhitenedPerturbation whitened_perturbation(const SpdMatrix& sigma0,
                                                  const SymMatrix& delta) {
    if (sigma0.dim() != delta.dim())
        throw ValidationError("whitened_perturbation: dimension mismatch");
    const MatrixXd s = sym_inv_sqrt(sigma0).entries();
    SymMatrix c0(detail::symmetrized(s * delta.entries() * s));
    const double rho = spectral_norm(c0);
    return WhitenedPerturbation{rho, std::move(c0)};
}

struct RegimeIndicators {
    double m0 = 0.0;         // lambda_min(Sigma0)
    double big_m0 = 0.0;     // lambda_max(Sigma0)
    double kappa = 0.0;      // big_m0 / m0
    double delta_norm = 0.0; // spectral norm of Delta
    double comm = 0.0;       // normalized commutator, in [0, 2]
};

// comm = ||Sigma0 Delta - Delta Sigma0||_F / (||Sigma0||_F ||Delta||_F),
// defined as 0 when Delta = 0.  Zero exactly when the pair commutes.
inline RegimeIndicators regime_indicators(const SpdMatrix& sigma0, const SymMatrix& delta) {
    if (sigma0.dim() != delta.dim())
        throw ValidationError("regime_indicators: dimension mismatch");
    RegimeIndicators out;
    out.m0 = sigma0.lambda_min();
    out.big_m0 = sigma0.lambda_max();
    out.kappa = out.big_m0 / out.m0;
    out.delta_norm = spectral_norm(delta);
    const double df = delta.entries().norm();
    if (df == 0.0) {
        out.comm = 0.0;
    } else {
        const MatrixXd sd = sigma0.entries() * delta.entries();
        out.comm = (sd - sd.transpose()).norm() / (sigma0.entries().norm() * df);
    }
    return out;
}

} // namespace gmmflow
