#pragma once

#include <stdexcept>
#include <string>

namespace tenf {

// Error classes map onto CLI exit codes: ConfigError -> 2,
// NumericalError -> 3, IoError -> 4. Contract violations inside the
// numerical kernels throw std::invalid_argument.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : Error {
  using Error::Error;
};

struct NumericalError : Error {
  using Error::Error;
};

// Raised when a gradient or loss goes non-finite; carries the name of the
// offending parameter so the failure is actionable.
struct TrainingError : NumericalError {
  explicit TrainingError(const std::string &param, const std::string &what)
      : NumericalError("parameter '" + param + "': " + what), parameter(param)
  {
  }
  std::string parameter;
};

struct IoError : Error {
  using Error::Error;
};

} // namespace tenf
