#pragma once

#include <stdexcept>
#include <string>

namespace ptzcalib {

/// Base class for every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A value violates a type invariant (non-orthonormal rotation, f <= 0, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// The input geometry makes the requested quantity unobservable.
class DegenerateConfiguration : public Error {
 public:
  using Error::Error;
};

/// A solver found no admissible solution.
class SolverFailure : public Error {
 public:
  using Error::Error;
};

/// Malformed file or stream.
class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace ptzcalib
