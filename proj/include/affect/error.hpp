#pragma once

#include <stdexcept>
#include <string>

namespace affect {

// Exit-code mapping used by the CLI: 0 success, 2 config, 3 data, 4 stage
// dependency, 1 anything else.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DataError : std::runtime_error {
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ShapeError : DataError {
  explicit ShapeError(const std::string& msg) : DataError(msg) {}
};

struct SchemaError : DataError {
  explicit SchemaError(const std::string& msg) : DataError(msg) {}
};

struct EmptyInputError : DataError {
  explicit EmptyInputError(const std::string& msg) : DataError(msg) {}
};

struct StageDependencyError : std::runtime_error {
  explicit StageDependencyError(const std::string& msg)
      : std::runtime_error(msg) {}
};

// CCC denominator of zero: both series constant with equal means.
struct UndefinedMetricError : std::runtime_error {
  explicit UndefinedMetricError(const std::string& msg)
      : std::runtime_error(msg) {}
};

}  // namespace affect
