#pragma once

#include <stdexcept>
#include <string>

namespace gmmflow {

// Base of every error thrown by this library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Numerical failures: bad spectra, underflow, integration blow-ups.
// The CLI maps these to exit code 3.
class NumericalError : public Error {
public:
    using Error::Error;
};

// Matrix is not symmetric positive definite (lambda_min at or below the
// positivity floor, or a broken spectral reconstruction).
class NotSpd final : public NumericalError {
public:
    using NumericalError::NumericalError;
};

// Scalar function evaluated outside its domain (e.g. phi at z <= -1).
class DomainError final : public NumericalError {
public:
    using NumericalError::NumericalError;
};

// Path parameter t outside [0,1]; never silently clamped.
class OutOfRange final : public NumericalError {
public:
    using NumericalError::NumericalError;
};

// Bound constants requested at rho_hat >= 1.
class LocalityViolated final : public NumericalError {
public:
    using NumericalError::NumericalError;
};

// Sinkhorn scaling degenerated (non-finite potentials).
class NumericalUnderflow final : public NumericalError {
public:
    using NumericalError::NumericalError;
};

// All component densities underflowed at an evaluation point.
class DegenerateDensity final : public NumericalError {
public:
    using NumericalError::NumericalError;
};

// A particle left the finite range during ODE integration.
class NonFiniteState final : public NumericalError {
public:
    using NumericalError::NumericalError;
};

// Structurally invalid input data (weights, dims, non-SPD covariance in a
// file). CLI exit code 2.
class ValidationError : public Error {
public:
    using Error::Error;
};

// Malformed input document. CLI exit code 2.
class ParseError final : public ValidationError {
public:
    using ValidationError::ValidationError;
};

// Filesystem failures. CLI exit code 4.
class IoError final : public Error {
public:
    using Error::Error;
};

} // namespace gmmflow
