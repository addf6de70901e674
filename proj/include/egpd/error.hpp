#pragma once

#include <stdexcept>
#include <string>

namespace egpd {

// Base of every error raised by the library. The CLI maps the subclasses
// onto process exit codes (config 1, data 2, numerical 3).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of a function (y <= 0, p > 1, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Inadmissible distribution parameters.
class ParameterError : public Error {
 public:
  using Error::Error;
};

// Non-convergence, overflow or a singular linear system.
class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what, double residual = 0.0)
      : Error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

class FitError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class UnsupportedError : public Error {
 public:
  using Error::Error;
};

}  // namespace egpd
