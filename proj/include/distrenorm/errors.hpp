#pragma once

#include <stdexcept>
#include <string>

namespace distrenorm {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside the domain of an operation (dimension mismatch, empty box, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Request exceeds a documented implementation limit (jet order, graph size, ...).
class CapabilityError : public Error {
 public:
  using Error::Error;
};

// Evaluation exactly on a locus where the object is not smooth or not defined.
class SingularLocusError : public Error {
 public:
  using Error::Error;
};

// Invalid scalar parameter (lambda outside (0,1], negative tolerance, ...).
class ParameterError : public Error {
 public:
  using Error::Error;
};

// A documented precondition on an input object does not hold.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

// A pairing or limit that does not converge.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

// Too few usable samples to fit a growth exponent.
class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

// Two routes that must agree do not (residual above tolerance).
class InconsistencyError : public Error {
 public:
  using Error::Error;
};

}  // namespace distrenorm
