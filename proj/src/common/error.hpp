#pragma once

#include <stdexcept>
#include <string>

namespace mpstep {

// Base of every error raised by the library. The C API maps each subclass to
// a status code, and the CLI maps status codes to process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Malformed container contents. Subclasses let callers tell the failure modes
// of a binary file apart.
class FormatError : public IoError {
 public:
  using IoError::IoError;
};

class VersionError : public FormatError {
 public:
  using FormatError::FormatError;
};

class TruncatedError : public FormatError {
 public:
  using FormatError::FormatError;
};

class ChecksumError : public FormatError {
 public:
  using FormatError::FormatError;
};

}  // namespace mpstep
