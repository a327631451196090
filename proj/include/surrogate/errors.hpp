#pragma once

#include <stdexcept>
#include <string>

namespace surrogate {

/// Raised when a caller breaks a documented precondition (bad dimensions,
/// out-of-range hyperparameters, malformed input files).
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a computation produces non-finite numbers or a matrix turns
/// out to be numerically singular.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ContractViolation(message);
}

}  // namespace surrogate
