#pragma once

#include <stdexcept>
#include <string>

namespace hashednets {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidBucketCount : public Error {
 public:
  using Error::Error;
};

/// Operand shapes do not agree, or an index is out of range.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Bad user-facing configuration: unknown names, out-of-range hyperparameters.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class DegenerateArchitecture : public Error {
 public:
  using Error::Error;
};

class InfeasibleBudget : public Error {
 public:
  using Error::Error;
};

/// Training produced a non-finite loss.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

/// Malformed or truncated IDX / model file.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace hashednets
