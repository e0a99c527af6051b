#pragma once

#include <stdexcept>
#include <string>

namespace flowcast {

/// Bad input: malformed files, inconsistent dimensions, invalid configuration.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Shapes that do not line up for an operation.
class DimensionError : public InputError {
 public:
  using InputError::InputError;
};

/// Non-finite values, divergence, or a failed numerical routine.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace flowcast
