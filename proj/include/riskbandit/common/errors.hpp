#pragma once

#include <stdexcept>
#include <string>

namespace riskbandit {

/// Invalid configuration: bad field value, unknown key, alpha outside its quantile set.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Vector or matrix dimensions that do not match what an operation expects.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Non-finite loss or gradient during training.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Checkpoint that fails to parse or does not match the expected layout.
class IntegrityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace riskbandit
