#pragma once

#include <stdexcept>
#include <string>

namespace btc {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes or sectors do not match.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A requested size exceeds a configured memory or runtime cap.
class CapacityError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// An iterative procedure (eigensolver, linear solve, integrator) failed.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace btc
