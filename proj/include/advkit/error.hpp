#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace advkit {

/// Base of every error raised by the library. `category()` is a stable,
/// machine-parsable tag used as the CLI error prefix.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual std::string_view category() const noexcept = 0;
};

// Tensor shapes that do not conform.
class DimensionError : public Error {
 public:
  using Error::Error;
  std::string_view category() const noexcept override { return "dimension_error"; }
};

// Precondition violated by the caller (bad class index, empty mask, ...).
class ContractError : public Error {
 public:
  using Error::Error;
  std::string_view category() const noexcept override { return "contract_error"; }
};

// Invalid configuration value or unknown key/model name.
class ConfigError : public Error {
 public:
  using Error::Error;
  std::string_view category() const noexcept override { return "config_error"; }
};

// Missing, corrupt, or version-mismatched data on disk.
class DataError : public Error {
 public:
  using Error::Error;
  std::string_view category() const noexcept override { return "data_error"; }
};

class IoError : public Error {
 public:
  using Error::Error;
  std::string_view category() const noexcept override { return "io_error"; }
};

// A postcondition the library guarantees was found broken. Always fatal.
class InvariantViolation : public Error {
 public:
  using Error::Error;
  std::string_view category() const noexcept override { return "invariant_violation"; }
};

}  // namespace advkit
