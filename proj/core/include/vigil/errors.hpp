#pragma once

#include <stdexcept>
#include <string>

namespace vigil {

// Base class for everything thrown by the library.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Tensor or layer shape mismatch; the message names the offending axis.
class DimensionError : public Error {
public:
  using Error::Error;
};

// Invalid configuration: non-integral output extents, bad hyperparameters,
// broken layer chains.
class ConfigError : public Error {
public:
  using Error::Error;
};

// Malformed on-disk data (bad magic, truncation). The message carries a byte
// offset or line number where one is known.
class FormatError : public Error {
public:
  using Error::Error;
};

// Checksum mismatch on an otherwise well-formed file.
class IntegrityError : public Error {
public:
  using Error::Error;
};

// Argument outside its valid range (crop rectangle, class label).
class RangeError : public Error {
public:
  using Error::Error;
};

// Unparseable token in a text input.
class ParseError : public Error {
public:
  using Error::Error;
};

// Frames or timestamps arriving out of order.
class InputOrderError : public Error {
public:
  using Error::Error;
};

// Non-finite values where finite math is required (NaN loss).
class NumericError : public Error {
public:
  using Error::Error;
};

// Filesystem-level failure.
class IoError : public Error {
public:
  using Error::Error;
};

}  // namespace vigil
