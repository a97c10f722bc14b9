#pragma once

#include <stdexcept>
#include <string>

namespace lure {

// Precondition violated by a caller-supplied value.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A computation produced NaN/Inf, diverged, or hit a singular solve.
class NumericFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Run configuration could not be parsed or validated. `field` is the dotted key.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& what)
      : std::runtime_error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

// A pipeline stage was started before its upstream artifact exists.
class DependencyError : public std::runtime_error {
 public:
  explicit DependencyError(std::string missing)
      : std::runtime_error("missing upstream artifact: " + missing), missing_(std::move(missing)) {}
  const std::string& missing() const { return missing_; }

 private:
  std::string missing_;
};

}  // namespace lure
