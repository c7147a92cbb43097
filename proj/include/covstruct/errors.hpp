#pragma once

#include <stdexcept>
#include <string>

namespace covstruct {

// Base class for every error thrown by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed arguments: dimension mismatches, non-finite data, bad ranges.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

// A trace or scale factor that must be positive is not.
class DegenerateScale : public Error {
 public:
  using Error::Error;
};

// A shape matrix violates its contract (not PSD, zero trace, ...).
class InvalidShape : public Error {
 public:
  using Error::Error;
};

// A sample is unusable (zero vector where a direction is required).
class DegenerateSample : public Error {
 public:
  using Error::Error;
};

// A structure specification is malformed for the requested dimension.
class InvalidSpec : public Error {
 public:
  using Error::Error;
};

// The operation is not defined for this structure kind.
class UnsupportedSpec : public Error {
 public:
  using Error::Error;
};

// A matrix required to be invertible is numerically singular.
class SingularMatrix : public Error {
 public:
  using Error::Error;
};

// The requested estimator does not exist for the given data (Tyler, n < p).
class NotExist : public Error {
 public:
  using Error::Error;
};

// Sample configuration too degenerate for the estimator (rank-deficient data).
class DegenerateData : public Error {
 public:
  using Error::Error;
};

// The constraint set is empty: no trace-one matrix satisfies the structure.
class InfeasibleStructure : public Error {
 public:
  using Error::Error;
};

}  // namespace covstruct
