#pragma once

#include <stdexcept>
#include <string>

namespace rare_reach {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Evaluation requested outside the finite domain of a cumulant
/// (the exponential moment blows up there).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// The cumulant has no positive root: the target is not a rare event.
class NoCramerRoot : public Error {
 public:
  using Error::Error;
};

/// Requested tilted drift lies outside the range of psi'.
class DriftOutOfRange : public Error {
 public:
  using Error::Error;
};

class EventCapExceeded : public Error {
 public:
  using Error::Error;
};

class BudgetCapExceeded : public Error {
 public:
  using Error::Error;
};

/// An estimator saw no successes and cannot form a ratio.
class InsufficientSignal : public Error {
 public:
  using Error::Error;
};

/// Every particle of a Fleming-Viot system was absorbed at once.
class ExtinctionError : public Error {
 public:
  using Error::Error;
};

class SizeError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  using Error::Error;
};

class ToleranceNotMet : public Error {
 public:
  using Error::Error;
};

}  // namespace rare_reach
