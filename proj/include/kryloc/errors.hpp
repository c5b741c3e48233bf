#pragma once

#include <stdexcept>

namespace kryloc {

// Each category maps to one CLI exit code (2, 3, 4).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EmptySectorError : ConfigError {
  using ConfigError::ConfigError;
};

struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GuardError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace kryloc
