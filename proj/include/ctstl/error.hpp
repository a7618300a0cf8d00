#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ctstl {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed formula or expression text. Line and column are 1-based.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t line, std::size_t column)
      : Error(std::to_string(line) + ":" + std::to_string(column) + ": " + message),
        line_(line),
        column_(column) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

/// A channel name that is not declared, or a sample that lacks one.
class ChannelError : public Error {
 public:
  using Error::Error;
};

/// Time grid problems: intervals leaving the horizon, off-grid endpoints,
/// empty index sets, non-monotone time stamps.
class GridError : public Error {
 public:
  using Error::Error;
};

/// Inconsistent dimensions or invalid numerical input.
class DimensionError : public Error {
 public:
  using Error::Error;
};

}  // namespace ctstl
