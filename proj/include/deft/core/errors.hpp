#pragma once

#include <stdexcept>
#include <string>

namespace deft {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Incompatible shapes or ranks.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// A convolution or pooling whose output would have an empty spatial extent.
class DegenerateOutputError : public DimensionError {
 public:
  using DimensionError::DimensionError;
};

// NaN/Inf values, or values outside an op's domain.
class NumericError : public Error {
 public:
  using Error::Error;
};

// API misuse (non-scalar loss, bad iteration index, empty inputs).
class UsageError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace deft
