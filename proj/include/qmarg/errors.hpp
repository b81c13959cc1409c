#pragma once

#include <stdexcept>
#include <string>

namespace qmarg {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Orders of matrices, subsystem dimensions or index sets do not fit together.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// An input violates a documented precondition (trace, positivity, spectrum,
/// admissible rank interval, ...).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// The marginal constraints admit no common global matrix.
class InconsistentConstraintsError : public Error {
 public:
  InconsistentConstraintsError(const std::string& what, double discrepancy)
      : Error(what), discrepancy_(discrepancy) {}
  double discrepancy() const { return discrepancy_; }

 private:
  double discrepancy_;
};

/// The eigen solver backend did not converge.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace qmarg
