#pragma once

#include <stdexcept>
#include <string>

namespace qotlab {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "error"; }
};

// Malformed input: invalid measure, bad config value, unsupported dimension.
class ValidationError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "validation"; }
};

class ConfigError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "config"; }
};

// An iterative solve stopped before reaching its tolerance.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }
  const char* kind() const noexcept override { return "convergence"; }

 private:
  double residual_;
};

// Internal state disagrees with itself (stale potentials, empty support row).
class InconsistencyError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "inconsistency"; }
};

}  // namespace qotlab
