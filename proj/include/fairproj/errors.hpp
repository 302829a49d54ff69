#pragma once

#include <stdexcept>
#include <string>

namespace fairproj {

// Exception hierarchy. The CLI maps each kind to a stable exit code:
// ConfigError -> 1, DataError -> 2, NumericError -> 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration or arguments.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed, inconsistent or incompatible input data.
class DataError : public Error {
 public:
  using Error::Error;
};

// Solver failure or numerically infeasible request.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace fairproj
