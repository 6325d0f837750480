#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lightk {

/// A required input file is missing or unreadable.
class LoadError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input data violates a structural invariant. Carries the 1-based line
/// number of the offending record when it came from a file (0 otherwise).
class ValidationError : public std::runtime_error {
 public:
  ValidationError(const std::string& what, std::size_t line = 0)
      : std::runtime_error(line ? what + " (line " + std::to_string(line) + ")"
                                : what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A forward computation produced NaN/Inf; the message names the op.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Curve fitting could not be performed (too few usable points, degenerate data).
class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace lightk
