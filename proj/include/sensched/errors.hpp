#pragma once

#include <stdexcept>
#include <string>

namespace sensched {

/// Root of the library's exception hierarchy. Each subclass maps onto one CLI
/// exit code (see tools/sensched.cpp).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad arguments: dimensions, ranges, empty intervals.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Malformed or incomplete scenario/solution document.
class SchemaError : public Error {
 public:
  using Error::Error;
};

/// Well-formed data that violates a model invariant (e.g. W not PD).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Numerical precondition failure in the covariance kernel.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Conic solver did not reach an optimal or near-optimal point.
class SolverError : public Error {
 public:
  using Error::Error;
};

/// Enumeration would exceed the configured schedule budget.
class BudgetError : public Error {
 public:
  BudgetError(const std::string& what, unsigned long long required)
      : Error(what), required_(required) {}
  unsigned long long required() const { return required_; }

 private:
  unsigned long long required_;
};

}  // namespace sensched
