#pragma once

#include <stdexcept>
#include <string>

namespace hybrid_routh {

// Broad failure classes; the CLI maps these onto exit codes.
enum class ErrorKind {
  input,         // malformed scenario, bad parameters, violated preconditions
  numerical,     // integrator failure, non-convergence, tangential crossing
  zeno,          // impacts accumulating faster than the configured dwell time
  admissibility  // post-impact state drives back into the guard
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class InputError : public Error {
 public:
  explicit InputError(const std::string& what) : Error(ErrorKind::input, what) {}
};

class PreconditionError : public Error {
 public:
  explicit PreconditionError(const std::string& what)
      : Error(ErrorKind::input, what) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what)
      : Error(ErrorKind::numerical, what) {}
};

class StepSizeUnderflow : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class TangentialCrossing : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class SingularInertia : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NoImpactError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class ClosureError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class ManifoldEscape : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class ZenoError : public Error {
 public:
  explicit ZenoError(const std::string& what) : Error(ErrorKind::zeno, what) {}
};

class AdmissibilityError : public Error {
 public:
  explicit AdmissibilityError(const std::string& what)
      : Error(ErrorKind::admissibility, what) {}
};

}  // namespace hybrid_routh
