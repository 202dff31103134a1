#pragma once

#include <stdexcept>
#include <string>

namespace tdesign {

// Base of every error raised by the library. The CLI maps InputError to
// exit code 2 and every NumericalError to exit code 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InputError : public Error {
 public:
  using Error::Error;
};

class ParseError : public InputError {
 public:
  using InputError::InputError;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

// The chosen gradient subset fails the normal-rank condition at a point.
class SingularPointError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class RetractionError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// A polynomial whose |f| (or |grad_t f|) integrates to zero on the variety.
class DegenerateError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class FlowError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace tdesign
