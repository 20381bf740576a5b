#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace femlocal {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration: unknown kinds, out-of-range degrees, bad coefficients.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Non-finite data encountered while evaluating user supplied functions.
class DataError : public Error {
 public:
  using Error::Error;
};

/// A refinement or allocation budget was exceeded.
class ResourceError : public Error {
 public:
  using Error::Error;
};

/// A hypothesis of an estimate checker does not hold on the given input.
class PreconditionError : public Error {
 public:
  PreconditionError(const std::string& what, std::vector<int> offending = {})
      : Error(what), offending_(std::move(offending)) {}
  const std::vector<int>& offending() const { return offending_; }

 private:
  std::vector<int> offending_;
};

/// Norm or ratio requested on an empty set or with a vanishing denominator.
class UndefinedError : public Error {
 public:
  using Error::Error;
};

class SolverError : public Error {
 public:
  using Error::Error;
};

class SingularSystemError : public SolverError {
 public:
  using SolverError::SolverError;
};

class IterativeFailure : public SolverError {
 public:
  IterativeFailure(const std::string& what, std::vector<double> history)
      : SolverError(what), history_(std::move(history)) {}
  const std::vector<double>& residual_history() const { return history_; }

 private:
  std::vector<double> history_;
};

/// The local bilinear form is not coercive on the requested subdomain.
class LocalCoercivityError : public SolverError {
 public:
  using SolverError::SolverError;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace femlocal
