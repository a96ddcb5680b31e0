#pragma once

#include <optional>
#include <stdexcept>
#include <string>

namespace nonrev {

/// Raised when an input violates an operation's preconditions.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Base class for failures of the numerics themselves (not of the caller).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ExplosionError : public NumericalError {
 public:
  ExplosionError(const std::string& what, double first_time, int n_exploded)
      : NumericalError(what), first_time_(first_time), n_exploded_(n_exploded) {}
  double first_time() const { return first_time_; }
  int n_exploded() const { return n_exploded_; }

 private:
  double first_time_;
  int n_exploded_;
};

class KernelMultiplicityError : public NumericalError {
 public:
  KernelMultiplicityError(const std::string& what, int multiplicity)
      : NumericalError(what), multiplicity_(multiplicity) {}
  int multiplicity() const { return multiplicity_; }

 private:
  int multiplicity_;
};

class FitError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace nonrev
