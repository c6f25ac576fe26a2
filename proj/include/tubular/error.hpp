#pragma once

#include <stdexcept>
#include <string>

namespace tubular {

/// Input violates a documented precondition (bad parameter, mismatched
/// geometry, degenerate data). The CLI maps this to exit code 1.
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

/// Input is well formed but mathematically degenerate, e.g. a constant
/// volume that cannot be normalized to unit variance.
class DegenerateInputError : public ValidationError {
 public:
  explicit DegenerateInputError(const std::string& what) : ValidationError(what) {}
};

/// File missing, unreadable, truncated or unwritable. CLI exit code 2.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace tubular
