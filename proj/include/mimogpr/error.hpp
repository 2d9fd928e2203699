#pragma once

#include <stdexcept>
#include <string>

namespace mimogpr {

// Raised for malformed inputs, infeasible configurations and numerical
// failures. The message carries the location (row/column, series) when known.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent panel file.
class ParseError : public Error {
 public:
  ParseError(std::size_t row, std::size_t column, const std::string& what)
      : Error("row " + std::to_string(row) + ", column " + std::to_string(column) + ": " + what),
        row_(row),
        column_(column),
        detail_(what) {}

  std::size_t row() const { return row_; }
  std::size_t column() const { return column_; }
  const std::string& detail() const { return detail_; }

 private:
  std::size_t row_;
  std::size_t column_;
  std::string detail_;
};

// Cholesky factorization failed even at the maximum jitter.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace mimogpr
