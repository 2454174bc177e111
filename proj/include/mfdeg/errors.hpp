#pragma once

#include <stdexcept>
#include <string>

namespace mfdeg {

/// Malformed or out-of-contract input.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Query outside the parameter ranges covered by the degree formulas.
class UnsupportedRangeError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Solution exceeded the blow-up guard.
class BlowUpError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Grid or quadrature too coarse for the bubble scale.
class ResolutionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Iterative method failed to reach its tolerance.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mfdeg
