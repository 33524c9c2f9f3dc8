#pragma once

#include <stdexcept>
#include <string>

namespace amr {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad argument to a function (sizes, ranges, empty grids).
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// CSV header does not carry a requested column.
class SchemaError : public Error {
 public:
  using Error::Error;
};

/// A cell could not be parsed as a finite number.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Data parsed but violates a domain invariant (e.g. treatment not in {0,1}).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A value outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A model could not be fitted.
class FitError : public Error {
 public:
  using Error::Error;
};

/// An object lacks state required by the requested operation.
class StateError : public Error {
 public:
  using Error::Error;
};

/// Oracle weight table does not cover the realized data.
class CoverageError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace amr
