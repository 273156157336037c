#pragma once

#include <stdexcept>
#include <string>

namespace longic {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input data (visit files, cohort invariants).
class DataError : public Error {
 public:
  using Error::Error;
};

/// A patient id that the cohort does not contain.
class UnknownIdError : public DataError {
 public:
  using DataError::DataError;
};

/// Invalid configuration or option values.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A model failed to train (single-class labels, solver cap, ...).
class TrainingError : public Error {
 public:
  using Error::Error;
};

/// Vector or matrix shape does not match the expected layout.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// The requested capability is not provided by this model kind.
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

/// Numerical failure during optimization (non-finite gradient, infeasible start).
class SolverError : public Error {
 public:
  using Error::Error;
};

}  // namespace longic
