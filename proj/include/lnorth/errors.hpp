#pragma once

#include <stdexcept>
#include <string>

namespace lnorth {

/// Raised when an iterative evaluation (series, root finding, quadrature
/// refinement) fails to reach its tolerance. Carries the last partial result
/// and the outstanding error bound so callers can decide what to do with it.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, double partial = 0.0, double bound = 0.0)
      : std::runtime_error(what), partial_(partial), bound_(bound) {}

  double partial() const noexcept { return partial_; }
  double bound() const noexcept { return bound_; }

 private:
  double partial_;
  double bound_;
};

/// Raised for inputs the library deliberately does not handle
/// (e.g. determinant oracle above its size cap, non-integer 2m in the sampler).
class UnsupportedError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace lnorth
