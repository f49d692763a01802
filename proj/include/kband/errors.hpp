#pragma once

#include <stdexcept>
#include <string>

namespace kband {

/// Base class for every error thrown by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Two inputs coincide within machine tolerance; the Gram matrix would be singular.
class DuplicateInputs : public Error {
 public:
  using Error::Error;
};

/// A kernel matrix could not be factorized even with jitter.
class SingularGram : public Error {
 public:
  using Error::Error;
};

/// Regularization weight below zero.
class NegativeLambda : public Error {
 public:
  using Error::Error;
};

/// A one-dimensional solver failed to bracket or converge within its budget.
class SolverDiverged : public Error {
 public:
  using Error::Error;
};

/// The dual of the norm-maximization problem has no feasible point
/// (the value ellipsoid is unbounded).
class InfeasibleDual : public Error {
 public:
  using Error::Error;
};

/// The outer-approximation radius is infinite or nonpositive.
class DegenerateRadius : public Error {
 public:
  using Error::Error;
};

/// A linear functional is unbounded over a degenerate ellipsoid.
class UnboundedDirection : public Error {
 public:
  using Error::Error;
};

/// Bad command line or configuration input.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// File system failure while reading or writing artifacts.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace kband
