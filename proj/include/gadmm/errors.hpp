#pragma once

#include <stdexcept>
#include <string>

namespace gadmm {

// Base class for all library errors so callers can catch one type.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Coupling blocks, weights, or iterates disagree on dimensions.
struct DimensionMismatch : Error {
  using Error::Error;
};

// An oracle violated its contract (first-order condition, projection law).
struct OracleInconsistent : Error {
  using Error::Error;
};

// An oracle failed to produce a minimizer (bad weights form, inner failure).
struct OracleFailure : Error {
  using Error::Error;
};

// Caller-supplied alpha or proximal weights contradict the chosen variant.
struct VariantConfigConflict : Error {
  using Error::Error;
};

// An iterate left the representable range (inf or NaN).
struct NonFinite : Error {
  using Error::Error;
};

// The requested quantity needs a strictly positive definite weight block.
struct RequiresPositiveDefinite : Error {
  using Error::Error;
};

// A certificate was requested on an instance without a reference solution.
struct MissingReference : Error {
  using Error::Error;
};

// A reference solution is attached but fails its accuracy contract.
struct InvalidReference : Error {
  using Error::Error;
};

// B lacks full column rank, so metric-based certificates are not licensed.
struct RankDeficientB : Error {
  using Error::Error;
};

// Rate estimation needs more iterates than the trace provides.
struct InsufficientTrace : Error {
  using Error::Error;
};

// All tail distances sit below the numerical noise floor.
struct NoiseFloor : Error {
  using Error::Error;
};

// An iterative reference computation ran out of iterations.
struct NotConverged : Error {
  using Error::Error;
};

// A dense eigendecomposition or factorization did not succeed.
struct EigenFailure : Error {
  using Error::Error;
};

// Weight matrices must be symmetric and positive semidefinite.
struct InvalidWeights : Error {
  using Error::Error;
};

// An experiment grid file is empty or contains unusable entries.
struct MalformedGrid : Error {
  using Error::Error;
};

}  // namespace gadmm
