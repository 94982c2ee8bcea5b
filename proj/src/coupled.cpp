#include "rte/coupled.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace rte {

namespace {

constexpr double kRelTol = 1e-12;

double hoelder_pairs(const std::vector<std::vector<double>>& pts, const std::vector<double>& val,
                     double gamma) {
  double best = 0.0;
  const long n = static_cast<long>(val.size());
#pragma omp parallel for schedule(dynamic, 16) reduction(max : best)
  for (long a = 0; a < n; ++a) {
    for (long b = a + 1; b < n; ++b) {
      const double df = std::abs(val[a] - val[b]);
      if (df == 0.0) continue;
      double d2 = 0.0;
      for (std::size_t c = 0; c < pts[a].size(); ++c) d2 += (pts[a][c] - pts[b][c]) * (pts[a][c] - pts[b][c]);
      best = std::max(best, df / std::pow(d2, 0.5 * gamma));
    }
  }
  return best;
}

}  // namespace

MediumBounds medium_bounds(const ScalarField& mu, const ScalarField& sigma, double gamma,
                           double support_radius, std::size_t pair_budget) {
  require_same_grid(mu.grid(), sigma.grid(), "medium_bounds");
  const Grid2& g = mu.grid();
  MediumBounds b;
  b.diameter = g.domain().diameter();
  b.mu_m = std::numeric_limits<double>::infinity();
  for (std::size_t idx : g.active_nodes()) {
    if ((g.node(idx) - g.domain().center).norm() <= support_radius) b.mu_m = std::min(b.mu_m, mu[idx]);
  }
  if (!std::isfinite(b.mu_m)) b.mu_m = 0.0;
  b.mu_M = holder_norm(mu, gamma, pair_budget).norm();
  b.sigma_M = holder_norm(sigma, gamma, pair_budget).norm();
  return b;
}

double boundary_norm_u(const DiskDomain& domain, const AdmissibleData& data) {
  if (data.u_B.is_constant()) return std::abs(data.u_B.constant_value());
  const auto points = sample_gamma(domain, data.norm_n_beta, data.norm_n_dir, GammaSide::minus);
  std::vector<std::vector<double>> pts;
  std::vector<double> val;
  double sup = 0.0;
  for (const PhasePoint& p : points) {
    const double v = data.u_B.evaluate(domain, p);
    sup = std::max(sup, std::abs(v));
    pts.push_back({p.x.x(), p.x.y(), p.theta.x(), p.theta.y()});
    val.push_back(v);
  }
  return sup + hoelder_pairs(pts, val, data.gamma);
}

double boundary_norm_T(const DiskDomain& domain, const AdmissibleData& data) {
  const int n = data.norm_n_circle;
  if (n < 8) throw ValidationError("boundary_norm_T: need at least 8 circle samples");
  const double dbeta = 2.0 * std::numbers::pi / n;
  const double ds = dbeta * domain.radius;
  std::vector<double> t(n), d1(n), d2(n);
  for (int i = 0; i < n; ++i) t[i] = data.T_B(i * dbeta);
  double s0 = 0.0, s1 = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double tp = t[(i + 1) % n];
    const double tm = t[(i + n - 1) % n];
    d1[i] = (tp - tm) / (2.0 * ds);
    d2[i] = (tp - 2.0 * t[i] + tm) / (ds * ds);
    s0 = std::max(s0, std::abs(t[i]));
    s1 = std::max(s1, std::abs(d1[i]));
    s2 = std::max(s2, std::abs(d2[i]));
  }
  std::vector<std::vector<double>> pts(n);
  for (int i = 0; i < n; ++i) {
    const Vec2 x = domain.boundary_point(i * dbeta);
    pts[i] = {x.x(), x.y()};
  }
  return s0 + s1 + s2 + hoelder_pairs(pts, d2, data.gamma);
}

double boundary_min_T(const AdmissibleData& data) {
  double m = std::numeric_limits<double>::infinity();
  const int n = std::max(8, data.norm_n_circle);
  for (int i = 0; i < n; ++i) m = std::min(m, data.T_B(2.0 * std::numbers::pi * i / n));
  return m;
}

bool Condition::pass() const {
  if (strict) return lhs < rhs;
  if (std::isinf(rhs) && rhs > 0.0) return true;
  return lhs <= rhs + kRelTol * std::max(std::abs(lhs), std::abs(rhs));
}

bool AdmissibilityReport::pass() const {
  return std::all_of(conditions.begin(), conditions.end(), [](const Condition& c) { return c.pass(); });
}

const Condition& AdmissibilityReport::find(const std::string& name) const {
  for (const Condition& c : conditions) {
    if (c.name == name) return c;
  }
  throw ValidationError("admissibility report has no condition '" + name + "'");
}

AdmissibilityReport check_admissible(const AdmissibleData& data, const MediumBounds& bounds,
                                     const DiskDomain& domain) {
  AdmissibilityReport r;
  r.bounds = bounds;
  r.u_norm = boundary_norm_u(domain, data);
  r.T_norm = boundary_norm_T(domain, data);
  const double u_min = data.u_B.min_value();
  const double T_min = boundary_min_T(data);
  const double compat_rhs =
      bounds.sigma_M > 0.0
          ? data.alpha1 * bounds.mu_m * std::exp(-bounds.diameter * bounds.mu_M) / bounds.sigma_M
          : std::numeric_limits<double>::infinity();
  r.conditions = {
      {"alpha1 > 0", 0.0, data.alpha1, true},
      {"alpha2 > 0", 0.0, data.alpha2, true},
      {"alpha1 <= delta1", data.alpha1, data.delta1, false},
      {"alpha2 <= delta2", data.alpha2, data.delta2, false},
      {"alpha1 <= min u_B", data.alpha1, u_min, false},
      {"|u_B| < delta1", r.u_norm, data.delta1, true},
      {"alpha2 <= min T_B", data.alpha2, T_min, false},
      {"|T_B| < delta2", r.T_norm, data.delta2, true},
      {"compatibility", std::pow(data.alpha2, 4), compat_rhs, false},
  };
  return r;
}

AdmissibilityReport check_admissible(const AdmissibleData& data, const ScalarField& mu,
                                     const ScalarField& sigma, double support_radius) {
  return check_admissible(data, medium_bounds(mu, sigma, data.gamma, support_radius),
                          mu.grid().domain());
}

ScalarField emission(const ScalarField& sigma, const ScalarField& T) {
  require_same_grid(sigma.grid(), T.grid(), "emission");
  ScalarField s(sigma.grid_ptr());
  for (std::size_t idx : sigma.grid().active_nodes()) {
    const double t2 = T[idx] * T[idx];
    s[idx] = sigma[idx] * t2 * t2;
  }
  return s;
}

namespace {

ScalarField mu_times_average(const ScalarField& mu, const AngularField& u) {
  ScalarField avg = angular_average(u);
  for (std::size_t idx : mu.grid().active_nodes()) avg[idx] *= mu[idx];
  return avg;
}

}  // namespace

Background solve_background(const ScalarField& mu, const BoundaryTrace& u_B,
                            const BoundaryFunction& T_B, const PoissonSolver& laplace, int n_dir,
                            double step) {
  const ScalarField zero(mu.grid_ptr());
  AngularField u0 = transport_solve(mu, zero, u_B, n_dir, step);
  ScalarField T0 = laplace.solve(-1.0 * mu_times_average(mu, u0), T_B);
  return {std::move(u0), std::move(T0)};
}

MapImage contraction_map(const ScalarField& phi, const ScalarField& T0, const ScalarField& sigma,
                         const ScalarField& mu, const PoissonSolver& laplace, int n_dir,
                         double step) {
  ScalarField source = emission(sigma, T0 + phi);
  static const BoundaryTrace no_inflow = BoundaryTrace::constant(GammaSide::minus, 0.0);
  AngularField u_tilde = transport_solve(mu, source, no_inflow, n_dir, step);
  ScalarField phi_next = laplace.solve(source - mu_times_average(mu, u_tilde), constant_boundary(0.0));
  return {std::move(phi_next), std::move(u_tilde), std::move(source)};
}

PositivityReport verify_positivity(const AngularField& u, const ScalarField& T,
                                   const AdmissibleData& data, const MediumBounds& bounds,
                                   double tol_pos) {
  PositivityReport r;
  r.u_min = min_active(u);
  r.T_min = min_active(T);
  r.u_bound = std::exp(-bounds.diameter * bounds.mu_M) * data.alpha1;
  r.T_bound = data.alpha2;
  r.tol = tol_pos;
  return r;
}

double SolveDiagnostics::contraction_constant() const {
  double c = 0.0;
  for (double r : contraction_ratios) c = std::max(c, r);
  return c;
}

ForwardSolution forward_solve(const ScalarField& sigma, const ScalarField& mu,
                              const AdmissibleData& data, const ForwardSettings& settings,
                              const std::optional<ScalarField>& phi0) {
  require_same_grid(sigma.grid(), mu.grid(), "forward_solve");
  if (settings.n_dir < 4) throw ValidationError("forward_solve: n_dir must be at least 4");
  if (!(settings.fp_tol > 0.0) || settings.max_iter < 1) {
    throw ValidationError("forward_solve: need fp_tol > 0 and max_iter >= 1");
  }
  const GridPtr& grid = mu.grid_ptr();
  const double step = settings.step > 0.0 ? settings.step : default_step(*grid);

  SolveDiagnostics diag;
  diag.admissibility = check_admissible(data, mu, sigma, settings.support_radius);
  if (!diag.admissibility.pass()) {
    std::ostringstream msg;
    msg << "boundary data outside the admissible set:";
    for (const Condition& c : diag.admissibility.conditions) {
      if (!c.pass()) msg << " [" << c.name << ": " << c.lhs << " vs " << c.rhs << "]";
    }
    if (!settings.allow_inadmissible) throw ValidationError(msg.str());
    diag.warnings.push_back(msg.str());
  }

  const PoissonSolver laplace(grid, settings.lin_tol);
  Background bg = solve_background(mu, data.u_B, data.T_B, laplace, settings.n_dir, step);

  ScalarField phi = phi0 ? *phi0 : ScalarField(grid);
  require_same_grid(*grid, phi.grid(), "forward_solve initial guess");
  std::optional<MapImage> image;
  bool converged = false;
  for (int k = 1; k <= settings.max_iter; ++k) {
    image = contraction_map(phi, bg.T0, sigma, mu, laplace, settings.n_dir, step);
    const double update = max_abs_diff(image->phi_next, phi);
    if (!diag.update_norms.empty() && diag.update_norms.back() > 0.0) {
      diag.contraction_ratios.push_back(update / diag.update_norms.back());
    }
    diag.update_norms.push_back(update);
    diag.iterations = k;
    diag.final_update_norm = update;
    phi = image->phi_next;
    if (!std::isfinite(update)) break;
    if (update <= settings.fp_tol) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    std::ostringstream msg;
    msg << "fixed-point iteration stopped after " << diag.iterations
        << " sweeps with update norm " << diag.final_update_norm;
    throw IterationError(msg.str(), diag.contraction_ratios);
  }

  // Re-evaluate the transport part at the fixed point itself.
  ScalarField T = bg.T0 + phi;
  ScalarField source = emission(sigma, T);
  static const BoundaryTrace no_inflow = BoundaryTrace::constant(GammaSide::minus, 0.0);
  AngularField u = bg.u0 + transport_solve(mu, source, no_inflow, settings.n_dir, step);

  diag.transport_residual = transport_residual(u, mu, source, step);
  diag.elliptic_residual = laplace.residual(T, source - mu_times_average(mu, u), data.T_B);
  double mu_u = 0.0;
  for (std::size_t idx : grid->active_nodes()) {
    for (int k = 0; k < u.n_dir(); ++k) mu_u = std::max(mu_u, std::abs(mu[idx] * u(idx, k)));
  }
  diag.residual_scale = grid->h() * grid->h() * (sup_abs(u) + mu_u + sup_abs(source));
  diag.positivity = verify_positivity(u, T, data, diag.admissibility.bounds);

  return {std::move(u), std::move(T), std::move(bg.u0), std::move(bg.T0), std::move(phi),
          std::move(source), std::move(diag)};
}

}  // namespace rte
