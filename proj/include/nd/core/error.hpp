#pragma once

#include <stdexcept>
#include <string>

namespace nd {

// Root of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shape or rank mismatch between operands.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// A shape with a zero-size dimension where a nonempty one is required.
class EmptyShapeError : public DimensionError {
 public:
  using DimensionError::DimensionError;
};

// Invalid convolution/patch geometry.
class GeometryError : public Error {
 public:
  using Error::Error;
};

// Non-finite or otherwise unusable input values.
class DataError : public Error {
 public:
  using Error::Error;
};

class InsufficientSamplesError : public Error {
 public:
  using Error::Error;
};

// Matrix is not positive definite, or an eigenvalue is out of domain.
class NumericalDomainError : public Error {
 public:
  using Error::Error;
};

// Operation called in the wrong lifecycle state (e.g. backward before forward).
class StateError : public Error {
 public:
  using Error::Error;
};

// Non-finite loss or gradient during training.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

// Malformed file contents (wrong size, bad magic, schema mismatch).
class FormatError : public Error {
 public:
  using Error::Error;
};

class CorruptRecordError : public FormatError {
 public:
  using FormatError::FormatError;
};

class MissingFileError : public Error {
 public:
  using Error::Error;
};

// Bad user-supplied configuration or argument value.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace nd
