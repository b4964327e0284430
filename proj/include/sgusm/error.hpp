#pragma once

#include <stdexcept>
#include <string>

namespace sgusm {

// Base for every error the library throws on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad user input: config files, CLI flags, missing paths.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A data record that fails validation. `where()` is a "file:line" locator
// when the record came from a file, empty otherwise.
class ValidationError : public Error {
 public:
  ValidationError(const std::string& message, std::string where = {})
      : Error(where.empty() ? message : where + ": " + message), where_(std::move(where)) {}

  const std::string& where() const noexcept { return where_; }

 private:
  std::string where_;
};

// Numerical failure inside a forward/backward pass (non-finite values).
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace sgusm
