#pragma once

#include <stdexcept>
#include <string>

namespace hadamard {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid configuration or precondition that the caller controls.
/// Mapped to exit status 2 by the CLI.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Evaluator produced a non-finite entry.
class EvaluationError : public Error {
public:
    using Error::Error;
};

/// Numerical failure: solver non-convergence, ambiguous spectra, saturation.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// An eigenvalue sits inside the guard band around the real axis.
class AmbiguousSpectrumError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// Argument of sinh/cosh beyond the double range guard.
class SaturationError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// A sampled quadrature grid is too coarse for the requested scale.
class ResolutionError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

/// A parameter inequality required by the construction failed.
class InfeasibleError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

/// Norm weights vanish or the lattice leaves the admissible domain.
class DomainError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// No usable exponential window in a growth trace.
class InsufficientGrowthError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

}  // namespace hadamard
