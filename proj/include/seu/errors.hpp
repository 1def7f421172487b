#pragma once

#include <stdexcept>
#include <string>

namespace seu {

/// Base class for everything thrown by this library.
struct SeuError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A caller-supplied value violated a precondition.
struct InvalidArgument : SeuError {
  using SeuError::SeuError;
};

/// Internal state that can only arise through memory corruption or misuse
/// (e.g. a non-positive urn mass).
struct CorruptedState : SeuError {
  using SeuError::SeuError;
};

/// The model/design pair does not satisfy the structural assumptions the
/// asymptotic machinery needs (constant row sums, simple principal
/// eigenvalue, strictly positive limiting proportions).
struct AssumptionViolation : SeuError {
  using SeuError::SeuError;
};

/// Normal-limit covariances were requested for a design whose spectral gap
/// makes them undefined (lambda >= 1/2).
struct CltInvalid : SeuError {
  using SeuError::SeuError;
};

/// An iterative numeric routine failed to converge; the message carries
/// the diagnostics.
struct NumericalFailure : SeuError {
  using SeuError::SeuError;
};

/// A design rule was evaluated outside its admissible domain.
struct DesignDomainError : SeuError {
  using SeuError::SeuError;
};

/// Malformed or inconsistent run configuration.
struct ConfigError : SeuError {
  using SeuError::SeuError;
};

}  // namespace seu
