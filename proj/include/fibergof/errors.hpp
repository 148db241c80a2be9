#pragma once

#include <stdexcept>
#include <string>

namespace fibergof {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input (bad graph, bad table, bad parameters).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// Length or shape mismatch between a matrix and a vector.
class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// Exact integer arithmetic left its representable range.
class Overflow : public Error {
 public:
  using Error::Error;
};

/// Failure reading or writing a file.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace fibergof
