#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "rte/fields.hpp"

namespace rte {

/// Dirichlet data on the circle, as a function of the boundary angle.
using BoundaryFunction = std::function<double(double beta)>;

inline BoundaryFunction constant_boundary(double value) {
  return [value](double) { return value; };
}

/// Dirichlet Poisson solver  Lap phi = g  on the disk, phi = dirichlet on the
/// circle. Five-point Laplacian with Shortley-Weller shortened arms where a
/// neighbour is exterior; arm lengths come from exact intersection of the
/// grid line with the circle. The sparse matrix is factorized once per grid,
/// so repeated solves (one per fixed-point sweep) only pay for the
/// triangular substitutions.
class PoissonSolver {
 public:
  explicit PoissonSolver(GridPtr grid, double lin_tol = 1e-10);
  ~PoissonSolver();
  PoissonSolver(PoissonSolver&&) noexcept;
  PoissonSolver& operator=(PoissonSolver&&) noexcept;

  /// Throws SolverError carrying the relative residual if it stays above
  /// lin_tol after iterative refinement.
  ScalarField solve(const ScalarField& g, const BoundaryFunction& dirichlet) const;

  /// max over unknown nodes of |L_h phi - g|, boundary arms taking dirichlet.
  double residual(const ScalarField& phi, const ScalarField& g,
                  const BoundaryFunction& dirichlet) const;

  const GridPtr& grid() const { return grid_; }
  double lin_tol() const { return lin_tol_; }
  /// Relative residual reached by the most recent solve.
  double last_residual() const { return last_residual_; }

 private:
  struct Impl;
  GridPtr grid_;
  double lin_tol_;
  std::unique_ptr<Impl> impl_;
  mutable double last_residual_ = 0.0;
};

/// One-shot convenience wrapper around PoissonSolver.
ScalarField poisson_solve(const ScalarField& g, const BoundaryFunction& dirichlet,
                          double lin_tol = 1e-10);

}  // namespace rte
