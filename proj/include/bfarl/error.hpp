#pragma once

#include <stdexcept>
#include <string>

namespace bfarl {

// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Incompatible matrix/vector dimensions.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Non-finite or otherwise unusable floating point result.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Malformed or missing input file content; messages carry row/column.
class IngestionError : public Error {
 public:
  using Error::Error;
};

// Invalid experiment or recipe configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace bfarl
