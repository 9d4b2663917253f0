#pragma once

#include <stdexcept>
#include <string>

namespace ldprec {

// Base class for every error raised by the library. The CLI maps the
// subclasses onto process exit codes (see ExitCode in cli.hpp).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Invalid experiment / CLI configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed or inconsistent input data.
class DataError : public Error {
 public:
  using Error::Error;
};

class ParseError : public DataError {
 public:
  ParseError(const std::string& what, std::size_t line)
      : DataError(what + " (line " + std::to_string(line) + ")"), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Iterative solvers, divergence and other numerical failures.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class DivergenceError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// Rejection sampler exceeded its attempt cap.
class SafetyError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class InsufficientSamplesError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// A true rating reached the service-provider side of a private pipeline.
class PrivacyBoundaryError : public Error {
 public:
  using Error::Error;
};

}  // namespace ldprec
