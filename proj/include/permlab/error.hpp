#pragma once

#include <stdexcept>
#include <string>

namespace permlab {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad input: malformed permuton, out-of-range parameter, tied coordinates.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// The requested (pattern, representation) combination has no exact path.
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

// A numerical target could not be reached (e.g. unattainable delta).
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace permlab
