#pragma once

#include <stdexcept>
#include <string>

namespace cohortshap {

// Base class for every failure raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input data (CSV cells, lengths, domains).
class DataError : public Error {
 public:
  using Error::Error;
};

// A model adapter could not produce predictions.
class ModelError : public Error {
 public:
  using Error::Error;
};

// Invalid run configuration. The CLI maps this to exit code 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace cohortshap
