#pragma once

#include <stdexcept>
#include <string>

namespace spdefield {

// Input lies outside the model domain (point outside grid, etc.).
class DomainError : public std::runtime_error {
 public:
  explicit DomainError(const std::string& msg) : std::runtime_error(msg) {}
};

// Index out of range.
class BoundsError : public std::out_of_range {
 public:
  explicit BoundsError(const std::string& msg) : std::out_of_range(msg) {}
};

// Invalid parameter value (non-positive precision, non-finite weight, ...).
class ParameterError : public std::invalid_argument {
 public:
  explicit ParameterError(const std::string& msg)
      : std::invalid_argument(msg) {}
};

// Mismatched shapes or incompatible objects.
class DimensionError : public std::invalid_argument {
 public:
  explicit DimensionError(const std::string& msg)
      : std::invalid_argument(msg) {}
};

// Bad configuration (domain mismatch, schema violation, unknown keys).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Cholesky failure: the matrix is not positive definite.  `pivot` is the
// row/column index of the offending pivot in the original ordering.
class NotPositiveDefiniteError : public std::runtime_error {
 public:
  NotPositiveDefiniteError(const std::string& stage, long pivot)
      : std::runtime_error("matrix not positive definite (" + stage +
                           ", pivot " + std::to_string(pivot) + ")"),
        stage_(stage),
        pivot_(pivot) {}
  const std::string& stage() const { return stage_; }
  long pivot() const { return pivot_; }

 private:
  std::string stage_;
  long pivot_;
};

// File parsing / serialization problems.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace spdefield
