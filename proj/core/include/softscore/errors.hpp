#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace softscore {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or unreadable input data. Row numbers are 1-based data rows
// (the header is not counted).
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t row = 0)
      : Error(row == 0 ? what : "row " + std::to_string(row) + ": " + what),
        row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

// A value lies outside the range an operation accepts.
class RangeError : public Error {
 public:
  using Error::Error;
};

// Non-finite input or a value outside the mathematical domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Correlation of a constant vector.
class UndefinedCorrelationError : public Error {
 public:
  using Error::Error;
};

// Divergence against a zero-variance distribution.
class UndefinedDivergenceError : public Error {
 public:
  using Error::Error;
};

// Adjusted label clipped to all zeros.
class DegenerateLabelError : public Error {
 public:
  using Error::Error;
};

// Record used without an annotated or assigned standard deviation.
class MissingSigmaError : public Error {
 public:
  using Error::Error;
};

// Training diverged (non-finite loss).
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace softscore
