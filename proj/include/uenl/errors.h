#pragma once

#include <stdexcept>
#include <string>

namespace uenl {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Incompatible tensor shapes or dimensions.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Non-finite values, domain violations (ln of a non-positive number,
// division by zero) and corrupt numeric state.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Malformed or unreadable dataset files.
class DataError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration values, unknown keys or bad CLI input.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace uenl
