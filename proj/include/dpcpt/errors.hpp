#pragma once

#include <stdexcept>
#include <string>

namespace dpcpt {

// Base class for all library errors so callers can catch in one place.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Parameter vector dimension does not match the model.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Parameter vector violates the model constraints.
class InvalidParameterError : public Error {
 public:
  using Error::Error;
};

// A computation produced a non-finite intermediate value.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// Input data unusable (empty, constant, negative counts, bad file).
class DataError : public Error {
 public:
  using Error::Error;
};

// All optimization starts failed to produce a finite objective.
class OptimizationError : public Error {
 public:
  using Error::Error;
};

// Score covariance estimate is degenerate beyond ridge repair.
class SingularKError : public Error {
 public:
  using Error::Error;
};

// Operation requires the built-in linear model.
class UnsupportedModelError : public Error {
 public:
  using Error::Error;
};

// d-ratio denominator (clean rejection rate) is zero.
class DegenerateRatioError : public Error {
 public:
  using Error::Error;
};

}  // namespace dpcpt
