#pragma once

#include <stdexcept>
#include <string>

namespace hopgat {

// Invalid user-supplied configuration (rates, sizes, presets, files).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor shapes that do not line up.
class DimensionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// API misuse by the caller, e.g. stepping an optimizer without gradients.
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// A broken internal invariant. Seeing one of these is a bug.
class InternalError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Forward pass produced NaN/Inf, or training diverged.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace hopgat
