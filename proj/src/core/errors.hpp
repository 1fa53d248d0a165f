#pragma once

#include <stdexcept>
#include <string>

namespace compindex {

/// Base class for all library errors.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent run/stage configuration.
class ConfigError : public Error {
  public:
    using Error::Error;
};

/// Invalid input data: structural violations, broken invariants, bad files.
class DataError : public Error {
  public:
    using Error::Error;
};

/// Numerical failure: degenerate moments, non-convergence, undefined ratios.
class NumericError : public Error {
  public:
    using Error::Error;
};

} // namespace compindex
