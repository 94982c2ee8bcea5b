#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rte/elliptic.hpp"
#include "rte/fields.hpp"
#include "rte/transport.hpp"

namespace rte {

// Forward problem
//   theta . grad u + mu u = sigma T^4,  u = u_B on Gamma_-,
//   Lap T = sigma T^4 - mu <u>,         T = T_B on the circle,
// solved as u = u0 + u~, T = T0 + phi with the background pair
//   theta . grad u0 + mu u0 = 0, u0 = u_B;   Lap T0 = -mu <u0>, T0 = T_B,
// and phi the fixed point of
//   F(phi) = Lap^{-1}( sigma (T0 + phi)^4 - mu <u~_phi> ),  phi = 0 on the circle,
// where u~_phi carries source sigma (T0 + phi)^4 and zero inflow.

/// Coefficient bounds entering the admissibility and positivity conditions.
/// mu_M and sigma_M are discrete C^gamma norms (sup + seminorm); mu_m is the
/// smallest attenuation over nodes with |x - c| <= support_radius.
struct MediumBounds {
  double mu_m = 0.0;
  double mu_M = 0.0;
  double sigma_M = 0.0;
  double diameter = 2.0;
};

MediumBounds medium_bounds(const ScalarField& mu, const ScalarField& sigma, double gamma,
                           double support_radius = 0.8,
                           std::size_t pair_budget = kDefaultPairBudget);

struct AdmissibleData {
  BoundaryTrace u_B = BoundaryTrace::constant(GammaSide::minus, 0.1);
  BoundaryFunction T_B = constant_boundary(0.05);
  double alpha1 = 0.1;
  double alpha2 = 0.05;
  double delta1 = 1.0;
  double delta2 = 1.0;
  double gamma = 0.5;
  // Sampling used for the discrete boundary norms.
  int norm_n_beta = 64;
  int norm_n_dir = 64;
  int norm_n_circle = 256;
};

/// Discrete C^gamma norm of u_B over sampled Gamma_- points, with the
/// Euclidean distance between (x, theta) pairs in R^2 x R^2.
double boundary_norm_u(const DiskDomain& domain, const AdmissibleData& data);
/// Discrete C^{2,gamma} norm of T_B as a periodic function of arc length:
/// sup |T| + sup |T'| + sup |T''| + Hoelder seminorm of T'' (central
/// differences on norm_n_circle points).
double boundary_norm_T(const DiskDomain& domain, const AdmissibleData& data);
double boundary_min_T(const AdmissibleData& data);

struct Condition {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  bool strict = false;  // lhs < rhs instead of lhs <= rhs
  double slack() const { return rhs - lhs; }
  bool pass() const;
};

struct AdmissibilityReport {
  MediumBounds bounds;
  double u_norm = 0.0;
  double T_norm = 0.0;
  std::vector<Condition> conditions;
  bool pass() const;
  const Condition& find(const std::string& name) const;
};

/// Every inequality of the admissible set and the positivity compatibility
/// condition alpha2^4 <= alpha1 mu_m exp(-d mu_M) / sigma_M, with slacks.
/// Non-strict inequalities pass within a relative tolerance of 1e-12.
AdmissibilityReport check_admissible(const AdmissibleData& data, const MediumBounds& bounds,
                                     const DiskDomain& domain = {});
AdmissibilityReport check_admissible(const AdmissibleData& data, const ScalarField& mu,
                                     const ScalarField& sigma, double support_radius = 0.8);

/// sigma * T^4 at the non-exterior nodes.
ScalarField emission(const ScalarField& sigma, const ScalarField& T);

struct Background {
  AngularField u0;
  ScalarField T0;
};

Background solve_background(const ScalarField& mu, const BoundaryTrace& u_B,
                            const BoundaryFunction& T_B, const PoissonSolver& laplace, int n_dir,
                            double step);

struct MapImage {
  ScalarField phi_next;
  AngularField u_tilde;
  ScalarField source;  // sigma (T0 + phi)^4
};

MapImage contraction_map(const ScalarField& phi, const ScalarField& T0, const ScalarField& sigma,
                         const ScalarField& mu, const PoissonSolver& laplace, int n_dir,
                         double step);

struct ForwardSettings {
  int n_dir = 64;
  double step = 0.0;  // 0 selects half the grid spacing
  double fp_tol = 1e-10;
  int max_iter = 200;
  double lin_tol = 1e-10;
  double support_radius = 0.8;
  bool allow_inadmissible = false;
};

struct PositivityReport {
  double u_min = 0.0;
  double u_bound = 0.0;  // exp(-d mu_M) alpha1
  double T_min = 0.0;
  double T_bound = 0.0;  // alpha2
  double tol = 1e-8;
  double u_margin() const { return u_min - u_bound; }
  double T_margin() const { return T_min - T_bound; }
  bool pass() const { return u_margin() >= -tol && T_margin() >= -tol; }
};

PositivityReport verify_positivity(const AngularField& u, const ScalarField& T,
                                   const AdmissibleData& data, const MediumBounds& bounds,
                                   double tol_pos = 1e-8);

struct SolveDiagnostics {
  int iterations = 0;
  std::vector<double> update_norms;
  std::vector<double> contraction_ratios;  // update_k / update_{k-1}, k >= 2
  double final_update_norm = 0.0;
  double transport_residual = 0.0;
  double elliptic_residual = 0.0;
  double residual_scale = 0.0;  // h^2 * (sup|u| + sup|mu u| + sup|S|)
  AdmissibilityReport admissibility;
  PositivityReport positivity;
  std::vector<std::string> warnings;
  /// Largest contraction ratio observed, the empirical C_F.
  double contraction_constant() const;
};

struct ForwardSolution {
  AngularField u;
  ScalarField T;
  AngularField u0;
  ScalarField T0;
  ScalarField phi;
  ScalarField source;  // sigma T^4
  SolveDiagnostics diag;
};

/// Picard iteration phi <- F(phi) from phi0 (zero by default) until the sup
/// norm of the update is at most fp_tol. Throws ValidationError for
/// inadmissible data unless allow_inadmissible, and IterationError with the
/// ratio history when max_iter is reached.
ForwardSolution forward_solve(const ScalarField& sigma, const ScalarField& mu,
                              const AdmissibleData& data, const ForwardSettings& settings,
                              const std::optional<ScalarField>& phi0 = std::nullopt);

}  // namespace rte
