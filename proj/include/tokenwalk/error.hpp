#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tokenwalk {

/// Bad input: malformed files, invalid configuration, violated preconditions.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A text input could not be parsed. `line()` is 1-based.
class ParseError : public ValidationError {
 public:
  ParseError(std::size_t line, const std::string& what)
      : ValidationError("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Argument outside the domain of a function (e.g. a non-interior simplex point).
class DomainError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// A numerical precondition or outcome failed: non-Hurwitz matrix, periodic
/// chain, divergence, non-convergence.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace tokenwalk
