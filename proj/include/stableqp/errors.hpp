#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace stableqp {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: wrong dimensions, non-finite data, asymmetric or indefinite Q.
class InvalidProblem : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public InvalidProblem {
 public:
  using InvalidProblem::InvalidProblem;
};

/// A pivot of the factorization fell below the singularity threshold.
class SingularSystem : public Error {
 public:
  using Error::Error;
};

/// Evaluation point outside the open box ||x||_inf < 1.
class OutOfDomain : public Error {
 public:
  using Error::Error;
};

/// A parameter of the cascade is not representable in binary64.
class ParamOverflow : public Error {
 public:
  using Error::Error;
};

class PrimalInitFailed : public Error {
 public:
  using Error::Error;
};

/// A Newton step violated its runtime post-check.
class StepRejected : public Error {
 public:
  using Error::Error;
};

class IterationBudgetExceeded : public Error {
 public:
  using Error::Error;
};

class PiCapExceeded : public Error {
 public:
  using Error::Error;
};

/// Oracle enumeration budget exceeded (n > 10).
class TooLarge : public Error {
 public:
  using Error::Error;
};

class BracketFailed : public Error {
 public:
  using Error::Error;
};

/// Problem-file syntax error with 1-based position.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t column)
      : Error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + what),
        line_(line),
        column_(column) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

/// Problem-file arrays inconsistent with the declared n, m.
class DimensionError : public Error {
 public:
  using Error::Error;
};

}  // namespace stableqp
