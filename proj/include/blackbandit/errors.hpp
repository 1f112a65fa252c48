#pragma once

#include <stdexcept>
#include <string>

namespace bb {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// A model produced a NaN/Inf, or a linear system is too ill-conditioned to solve.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Raised when a loss query would exceed the ledger's budget. Nothing is charged.
class BudgetExhausted : public Error {
 public:
  using Error::Error;
};

/// Remote oracle unreachable, non-2xx response or malformed body.
class TransportError : public Error {
 public:
  using Error::Error;
};

/// Operation requires a capability the oracle does not have (gradient, classes).
class Unsupported : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace bb
