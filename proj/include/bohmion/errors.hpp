#pragma once

#include <stdexcept>
#include <string>

namespace bohmion {

/// Failure categories. The CLI maps these onto process exit codes.
enum class ErrorKind {
  Config,
  Dimension,
  DegenerateEnsemble,
  Domain,
  Structure,
  Normalization,
  StepFailure,
  Numerical,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& what) : Error(ErrorKind::Config, what) {}
};

struct DimensionError : Error {
  explicit DimensionError(const std::string& what) : Error(ErrorKind::Dimension, what) {}
};

struct DegenerateEnsembleError : Error {
  explicit DegenerateEnsembleError(const std::string& what)
      : Error(ErrorKind::DegenerateEnsemble, what) {}
};

/// The quadrature domain does not cover the kernel support of the ensemble.
struct DomainError : Error {
  explicit DomainError(const std::string& what) : Error(ErrorKind::Domain, what) {}
};

/// A structural invariant (Hermiticity, trace, positivity) is violated.
struct StructureError : Error {
  explicit StructureError(const std::string& what) : Error(ErrorKind::Structure, what) {}
};

struct NormalizationError : Error {
  explicit NormalizationError(const std::string& what) : Error(ErrorKind::Normalization, what) {}
};

/// Implicit solve did not converge. Carries the last fixed-point residual.
class StepFailure : public Error {
 public:
  StepFailure(const std::string& what, double residual, int iterations)
      : Error(ErrorKind::StepFailure, what), residual_(residual), iterations_(iterations) {}
  double residual() const noexcept { return residual_; }
  int iterations() const noexcept { return iterations_; }

 private:
  double residual_;
  int iterations_;
};

struct NumericalError : Error {
  explicit NumericalError(const std::string& what) : Error(ErrorKind::Numerical, what) {}
};

}  // namespace bohmion
