#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rte {

// Process exit codes used by the command-line front end.
enum class ExitCode : int {
  success = 0,
  validation = 1,
  nonconvergence = 2,
  io = 3,
};

/// Base of every error the library throws. Carries the exit-code category
/// and, once it has passed through the reconstruction pipeline, the name of
/// the stage that raised it.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, ExitCode code, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)), code_(code) {}

  const std::string& kind() const noexcept { return kind_; }
  ExitCode code() const noexcept { return code_; }
  const std::string& stage() const noexcept { return stage_; }
  void set_stage(std::string stage) { stage_ = std::move(stage); }

 private:
  std::string kind_;
  ExitCode code_;
  std::string stage_;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what)
      : Error("validation", ExitCode::validation, what) {}

 protected:
  ValidationError(std::string kind, const std::string& what)
      : Error(std::move(kind), ExitCode::validation, what) {}
};

/// A point or parameter outside the region where an operation is defined.
class DomainError : public ValidationError {
 public:
  explicit DomainError(const std::string& what) : ValidationError("domain", what) {}
};

/// Boundary measurement does not cover a phase point the inversion needs.
class CoverageError : public ValidationError {
 public:
  explicit CoverageError(const std::string& what) : ValidationError("coverage", what) {}
};

/// Reconstructed temperature fell below the positivity floor.
class PositivityError : public ValidationError {
 public:
  explicit PositivityError(const std::string& what) : ValidationError("positivity", what) {}
};

/// Linear solver failed to reach its residual tolerance.
class SolverError : public Error {
 public:
  SolverError(const std::string& what, double residual)
      : Error("solver", ExitCode::nonconvergence, what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// Fixed-point iteration failed to converge.
class IterationError : public Error {
 public:
  IterationError(const std::string& what, std::vector<double> ratios)
      : Error("iteration", ExitCode::nonconvergence, what), ratios_(std::move(ratios)) {}
  /// Successive update-norm ratios observed before giving up.
  const std::vector<double>& ratios() const noexcept { return ratios_; }

 private:
  std::vector<double> ratios_;
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error("io", ExitCode::io, what) {}
};

}  // namespace rte
