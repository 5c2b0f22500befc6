#pragma once

#include <stdexcept>
#include <string>

namespace latcor {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Structural problems: invalid binding maps, UVC failures, bad arguments.
class ValidationError : public Error {
public:
  using Error::Error;
};

/// File and format problems: unreadable files, malformed cells, bad headers.
class ParseError : public Error {
public:
  using Error::Error;
};

/// Numerical failures: non-positive variances where positivity is required,
/// positive-definiteness unattainable, degenerate splits.
class NumericError : public Error {
public:
  using Error::Error;
};

} // namespace latcor
