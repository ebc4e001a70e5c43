#pragma once

#include <stdexcept>
#include <string>

namespace feds3a {

// Base of every error raised by the library. The CLI maps ConfigError to
// exit code 2 and everything else to 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad configuration: inconsistent dimensions, out-of-range settings.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A configuration field violated its documented bound.
class ValidationError : public ConfigError {
 public:
  ValidationError(std::string field, const std::string& message)
      : ConfigError(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

// Malformed or inconsistent input data.
class InputError : public Error {
 public:
  using Error::Error;
};

class SchemaError : public InputError {
 public:
  using InputError::InputError;
};

class PartitionError : public InputError {
 public:
  using InputError::InputError;
};

// NaN/Inf where finite values are required.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Model version bookkeeping: length mismatch against a base, missing cached
// base version.
class VersionError : public Error {
 public:
  using Error::Error;
};

class CorruptionError : public Error {
 public:
  using Error::Error;
};

// The event loop cannot make progress.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace feds3a
