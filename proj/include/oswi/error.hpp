#pragma once

#include <stdexcept>
#include <string>

namespace oswi {

/// Base class for every error raised by the library. The CLI maps
/// `ConfigError` subclasses to exit code 2 and `IoError` subclasses to 3.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
public:
  using Error::Error;
};

class IoError : public Error {
public:
  using Error::Error;
};

// Numerical / argument errors.
class DomainError : public ConfigError {
public:
  using ConfigError::ConfigError;
};

class ParseError : public ConfigError {
public:
  using ConfigError::ConfigError;
};

class InvalidGrid : public ConfigError {
public:
  using ConfigError::ConfigError;
};

class BracketFailure : public Error {
public:
  using Error::Error;
};

class NoSuchR : public Error {
public:
  using Error::Error;
};

class ZeroCoordinate : public DomainError {
public:
  using DomainError::DomainError;
};

class EmptyInput : public DomainError {
public:
  using DomainError::DomainError;
};

class ShapeMismatch : public ConfigError {
public:
  using ConfigError::ConfigError;
};

class BatchTooSmall : public ConfigError {
public:
  using ConfigError::ConfigError;
};

class TooLarge : public ConfigError {
public:
  using ConfigError::ConfigError;
};

// Dataset file errors.
class BadMagic : public IoError {
public:
  using IoError::IoError;
};

class TruncatedFile : public IoError {
public:
  using IoError::IoError;
};

class CountMismatch : public IoError {
public:
  using IoError::IoError;
};

class ChecksumMismatch : public IoError {
public:
  using IoError::IoError;
};

} // namespace oswi
