#pragma once

#include <stdexcept>
#include <string>

namespace adanet {

// All library failures derive from Error so callers can catch one type at the
// CLI boundary; the subclasses name the contract that was broken.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class ContractError : public Error {
 public:
  using Error::Error;
};

class ParameterError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class UnsupportedSizeError : public Error {
 public:
  using Error::Error;
};

class SamplingError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

// Raster / checkpoint container failures.
class FormatError : public Error {
 public:
  using Error::Error;
};

class LengthError : public FormatError {
 public:
  using FormatError::FormatError;
};

class VersionError : public FormatError {
 public:
  using FormatError::FormatError;
};

// A loss term went NaN/Inf during training.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace adanet
