#pragma once

#include <stdexcept>
#include <string>

namespace kinjump {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the domain of a function (e.g. a point outside the cut).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A numerical stage produced a non-finite or degenerate value.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// An iterative procedure failed to reach its tolerance.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// The oracle's slab is too short for a clean far-field fit.
class DomainTooShortError : public ConvergenceError {
 public:
  using ConvergenceError::ConvergenceError;
};

}  // namespace kinjump
