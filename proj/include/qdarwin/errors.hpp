#pragma once

#include <stdexcept>
#include <string>

namespace qdarwin {

// Malformed arguments: shape mismatches, non-Hermitian operators, values out of range.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A dense representation would exceed the configured dimension cap.
class ResourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The requested closed-form path does not apply to this model.
class UnsupportedPathError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// A numerical invariant was violated beyond tolerance.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace qdarwin
