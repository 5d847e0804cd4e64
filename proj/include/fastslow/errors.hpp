#pragma once

#include <stdexcept>
#include <string>

namespace fastslow {

// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// The sampled symmetric part of A fails (Z, AZ) >= gamma |Z|^2 with gamma > 0.
struct StabilityViolation : Error { using Error::Error; };

// Time grid is empty, unsorted, or does not start at zero.
struct InvalidGrid : Error { using Error::Error; };

// Fields passed to a constructor do not share dimension or domain box.
struct DomainMismatch : Error { using Error::Error; };

// A(x, t) is singular or numerically unusable (condition number > 1e12).
struct SingularA : Error { using Error::Error; };

// Symmetric part of A is not positive definite; the stationary integral diverges.
struct UnstableA : Error { using Error::Error; };

// A linear solve produced a solution violating its residual/PSD contract.
struct SolveFailure : Error { using Error::Error; };

// An analytic gradient/Hessian was requested from a field that has none.
struct GradientUnavailable : Error { using Error::Error; };

// Trajectories or paths do not live on compatible time grids.
struct GridMismatch : Error { using Error::Error; };

// Explicit Euler step size violates the fast-equation stability bound.
struct StepUnstable : Error { using Error::Error; };

// Argument outside the range where a formula is valid (e.g. s >= 1).
struct OutOfRange : Error { using Error::Error; };

// Monte Carlo estimator invoked with too few paths.
struct InsufficientPaths : Error { using Error::Error; };

// Requested boundary condition is not supported by the discretization.
struct BoundaryUnsupported : Error { using Error::Error; };

// The two sides of a dual-route check were built from different fields.
struct FieldMismatch : Error { using Error::Error; };

// Direct linear solver hit a zero pivot or produced a non-finite solution.
struct NonConvergedLinearSolve : Error { using Error::Error; };

// Run configuration failed schema validation.
struct ConfigInvalid : Error { using Error::Error; };

}  // namespace fastslow
