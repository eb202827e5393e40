#pragma once

#include <stdexcept>
#include <string>

namespace bcsprobe {

// Base class for every numerical failure raised by the library. The CLI maps
// these onto exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NonConvergence : public NumericalError {
 public:
  NonConvergence(const std::string& what, double residual_gap, double residual_density)
      : NumericalError(what), residual_gap_(residual_gap), residual_density_(residual_density) {}
  double residual_gap() const noexcept { return residual_gap_; }
  double residual_density() const noexcept { return residual_density_; }

 private:
  double residual_gap_;
  double residual_density_;
};

class QuadratureNotConverged : public NumericalError {
 public:
  QuadratureNotConverged(const std::string& what, double error_estimate)
      : NumericalError(what), error_estimate_(error_estimate) {}
  double error_estimate() const noexcept { return error_estimate_; }

 private:
  double error_estimate_;
};

class PoleSingular : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class RootBracketFailure : public NumericalError {
 public:
  RootBracketFailure(const std::string& what, int sign_changes)
      : NumericalError(what), sign_changes_(sign_changes) {}
  int sign_changes() const noexcept { return sign_changes_; }

 private:
  int sign_changes_;
};

class NoModeAtFrequency : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class StepTooLarge : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// Invalid arguments (negative wave vectors, non-positive broadening, ...).
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace bcsprobe
