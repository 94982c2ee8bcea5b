#include "rte/inverse.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <memory>
#include <random>
#include <sstream>
#include <tuple>

#include "parallel.hpp"

namespace rte {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Exit point of line (s, theta) through the disk, if the line crosses it.
std::optional<PhasePoint> exit_point(const DiskDomain& domain, double s, const Vec2& theta) {
  const Vec2 anchor = s * perp(theta);
  const auto span = chord(domain, anchor, theta);
  if (!span || span->second - span->first <= 0.0) return std::nullopt;
  return PhasePoint{anchor + span->second * theta, theta};
}

double inflow_term(const ScalarField& mu, const BoundaryTrace& u_B, const PhasePoint& p, double step) {
  return characteristic(mu, nullptr, u_B, p, step).ballistic;
}

template <class Value>
Sinogram fill_sinogram(const DiskDomain& domain, const SinogramShape& shape, Value&& value) {
  Sinogram out(shape);
  detail::parallel_for(shape.n_ang, 4, [&](long k) {
    const Vec2 theta = direction(shape.angle(static_cast<int>(k)));
    for (int i = 0; i < shape.n_s; ++i) {
      if (std::abs(shape.s(i)) >= domain.radius) continue;
      if (auto p = exit_point(domain, shape.s(i), theta)) out(i, static_cast<int>(k)) = value(*p);
    }
  });
  return out;
}

}  // namespace

MeasurementFn simulated_measurement(const ScalarField& mu, const ScalarField& source,
                                    const BoundaryTrace& u_B, double step) {
  auto state = std::make_shared<const std::tuple<ScalarField, ScalarField, BoundaryTrace>>(mu, source, u_B);
  return [state, step](const PhasePoint& p) {
    const auto& [m, s, b] = *state;
    return characteristic(m, &s, b, p, step).total();
  };
}

BoundaryTrace tabulate_measurement(const MeasurementFn& measure, const DiskDomain& domain,
                                   int n_beta, int n_dir) {
  const auto points = sample_gamma(domain, n_beta, n_dir, GammaSide::plus);
  std::vector<TraceSample> samples(points.size());
  const long count = static_cast<long>(points.size());
  detail::parallel_for(count, 64, [&](long a) {
    samples[a] = BoundaryTrace::sample_at(domain, points[a], measure(points[a]));
  });
  return BoundaryTrace::from_samples(GammaSide::plus, std::move(samples));
}

Sinogram boundary_to_sinogram(const MeasurementFn& measure, const BoundaryTrace& u_B,
                              const ScalarField& mu, const SinogramShape& shape, double step) {
  require_nonnegative(mu, "boundary_to_sinogram");
  return fill_sinogram(mu.grid().domain(), shape, [&](const PhasePoint& p) {
    return measure(p) - inflow_term(mu, u_B, p, step);
  });
}

Sinogram boundary_to_sinogram(const BoundaryTrace& measured, const BoundaryTrace& u_B,
                              const ScalarField& mu, const SinogramShape& shape, double step) {
  require_nonnegative(mu, "boundary_to_sinogram");
  const DiskDomain& domain = mu.grid().domain();
  if (measured.is_constant()) {
    const double v = measured.constant_value();
    return boundary_to_sinogram([v](const PhasePoint&) { return v; }, u_B, mu, shape, step);
  }
  if (measured.side() != GammaSide::plus) {
    throw ValidationError("boundary_to_sinogram: measurement must live on Gamma_+");
  }
  std::vector<TraceSample> residual = measured.samples();
  const long count = static_cast<long>(residual.size());
  detail::parallel_for(count, 64, [&](long a) {
    TraceSample& s = residual[a];
    const PhasePoint p{domain.boundary_point(s.beta), direction(s.dir_angle)};
    s.value -= inflow_term(mu, u_B, p, step);
  });
  const BoundaryTrace table = BoundaryTrace::from_samples(GammaSide::plus, std::move(residual));
  if (!table.has_lattice()) {
    throw CoverageError("boundary_to_sinogram: stored measurement is not on a (beta, dir) lattice");
  }

  std::vector<PhasePoint> gaps;
  Sinogram out(shape);
  for (int k = 0; k < shape.n_ang; ++k) {
    const Vec2 theta = direction(shape.angle(k));
    for (int i = 0; i < shape.n_s; ++i) {
      if (std::abs(shape.s(i)) >= domain.radius) continue;
      const auto p = exit_point(domain, shape.s(i), theta);
      if (!p) continue;
      if (auto v = table.try_evaluate(domain, *p)) {
        out(i, k) = *v;
      } else {
        gaps.push_back(*p);
      }
    }
  }
  if (!gaps.empty()) {
    std::ostringstream msg;
    msg << "stored measurement misses " << gaps.size() << " exit points, first at";
    for (std::size_t g = 0; g < std::min<std::size_t>(gaps.size(), 5); ++g) {
      const TraceSample s = BoundaryTrace::sample_at(domain, gaps[g], 0.0);
      msg << " (beta=" << s.beta << ", dir=" << s.dir_angle << ")";
    }
    throw CoverageError(msg.str());
  }
  return out;
}

void add_noise(std::span<double> values, double std_dev, std::uint64_t seed) {
  if (!(std_dev >= 0.0)) throw ValidationError("add_noise: standard deviation must be nonnegative");
  if (std_dev == 0.0) return;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, std_dev);
  for (double& v : values) v += normal(rng);
}

EmissionRecovery recover_emission(const Sinogram& sino, const ScalarField& mu, double step) {
  EmissionRecovery r{novikov_invert(sino, mu, mu.grid_ptr(), step)};
  const Grid2& g = mu.grid();
  double neg = 0.0;
  r.raw_min = 0.0;
  for (std::size_t idx : g.active_nodes()) {
    r.raw_min = std::min(r.raw_min, r.S[idx]);
    if (r.S[idx] < 0.0) {
      neg -= r.S[idx];
      r.S[idx] = 0.0;
    }
  }
  r.clamped_mass = neg * g.h() * g.h();
  return r;
}

AngularField recover_u(const ScalarField& S, const ScalarField& mu, const BoundaryTrace& u_B,
                       int n_dir, double step) {
  return transport_solve(mu, S, u_B, n_dir, step);
}

ScalarField recover_T(const ScalarField& S, const AngularField& u, const ScalarField& mu,
                      const BoundaryFunction& T_B, double lin_tol) {
  ScalarField g = angular_average(u);
  for (std::size_t idx : mu.grid().active_nodes()) g[idx] = S[idx] - mu[idx] * g[idx];
  return poisson_solve(g, T_B, lin_tol);
}

std::vector<std::size_t> reconstruction_mask(const Grid2& grid, double margin) {
  if (!(margin >= 0.0)) throw ValidationError("reconstruction mask: margin must be nonnegative");
  const DiskDomain& dom = grid.domain();
  std::vector<std::size_t> mask;
  for (std::size_t idx : grid.active_nodes()) {
    if ((grid.node(idx) - dom.center).norm() <= dom.radius - margin) mask.push_back(idx);
  }
  return mask;
}

SigmaRecovery recover_sigma(const ScalarField& S, const ScalarField& T, double floor,
                            double margin) {
  require_same_grid(S.grid(), T.grid(), "recover_sigma");
  if (!(floor > 0.0)) throw ValidationError("recover_sigma: floor must be positive");
  SigmaRecovery r{ScalarField(S.grid_ptr())};
  const auto mask = reconstruction_mask(S.grid(), margin);
  r.min_T_on_mask = std::numeric_limits<double>::infinity();
  for (std::size_t idx : mask) r.min_T_on_mask = std::min(r.min_T_on_mask, T[idx]);
  if (r.min_T_on_mask < floor) {
    std::ostringstream msg;
    msg << "recovered temperature " << r.min_T_on_mask << " is below the floor " << floor
        << " on the reconstruction mask";
    throw PositivityError(msg.str());
  }
  for (std::size_t idx : mask) {
    const double t2 = T[idx] * T[idx];
    r.sigma[idx] = S[idx] / (t2 * t2);
  }
  return r;
}

double relative_sup_error(const ScalarField& a, const ScalarField& b,
                          const std::vector<std::size_t>& nodes) {
  double num = 0.0, den = 0.0;
  for (std::size_t idx : nodes) {
    num = std::max(num, std::abs(a[idx] - b[idx]));
    den = std::max(den, std::abs(b[idx]));
  }
  return den > 0.0 ? num / den : num;
}

double relative_l2_error(const ScalarField& a, const ScalarField& b,
                         const std::vector<std::size_t>& nodes) {
  double num = 0.0, den = 0.0;
  for (std::size_t idx : nodes) {
    num += (a[idx] - b[idx]) * (a[idx] - b[idx]);
    den += b[idx] * b[idx];
  }
  return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

PipelineResult run_pipeline(const Measurement& measurement, const BoundaryTrace& u_B,
                            const BoundaryFunction& T_B, const ScalarField& mu,
                            const InverseSettings& settings, const Truth& truth) {
  const GridPtr& grid = mu.grid_ptr();
  const double step = settings.step > 0.0 ? settings.step : default_step(*grid);
  std::vector<StageReport> stages;

  auto stage = [&stages](const std::string& name, auto&& body) {
    const auto t0 = std::chrono::steady_clock::now();
    StageReport rep{name, 0.0, {}};
    try {
      auto value = body(rep);
      rep.seconds = seconds_since(t0);
      stages.push_back(std::move(rep));
      return value;
    } catch (Error& e) {
      if (e.stage().empty()) e.set_stage(name);
      throw;
    }
  };

  Sinogram sino = stage("boundary_to_sinogram", [&](StageReport& rep) {
    Sinogram s = std::visit(
        [&](const auto& m) -> Sinogram {
          using M = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<M, Sinogram>) {
            return m;
          } else {
            return boundary_to_sinogram(m, u_B, mu, settings.sino, step);
          }
        },
        measurement);
    rep.metrics["sup_abs"] = s.sup_abs();
    return s;
  });

  EmissionRecovery em = stage("recover_emission", [&](StageReport& rep) {
    EmissionRecovery e = recover_emission(sino, mu, step);
    rep.metrics["raw_min"] = e.raw_min;
    rep.metrics["clamped_mass"] = e.clamped_mass;
    rep.metrics["sup"] = sup_abs(e.S);
    return e;
  });

  AngularField u = stage("recover_u", [&](StageReport& rep) {
    AngularField v = recover_u(em.S, mu, u_B, settings.n_dir, step);
    rep.metrics["min"] = min_active(v);
    rep.metrics["sup"] = sup_abs(v);
    return v;
  });

  ScalarField T = stage("recover_T", [&](StageReport& rep) {
    ScalarField v = recover_T(em.S, u, mu, T_B, settings.lin_tol);
    rep.metrics["min"] = min_active(v);
    rep.metrics["sup"] = sup_abs(v);
    return v;
  });

  SigmaRecovery sr = stage("recover_sigma", [&](StageReport& rep) {
    SigmaRecovery v = recover_sigma(em.S, T, settings.floor, settings.mask_margin);
    rep.metrics["min_T_on_mask"] = v.min_T_on_mask;
    rep.metrics["sup"] = sup_abs(v.sigma);
    return v;
  });

  PipelineResult out{std::move(sr.sigma), std::move(em.S), std::move(u), std::move(T),
                     std::move(sino), std::move(stages), {}};
  const auto mask = reconstruction_mask(*grid, settings.mask_margin);
  if (truth.sigma) {
    out.truth_metrics["sigma_rel_sup_error"] = relative_sup_error(out.sigma, *truth.sigma, mask);
    out.truth_metrics["sigma_rel_l2_error"] = relative_l2_error(out.sigma, *truth.sigma, mask);
    double abs_err = 0.0;
    for (std::size_t idx : mask) abs_err = std::max(abs_err, std::abs(out.sigma[idx] - (*truth.sigma)[idx]));
    out.truth_metrics["sigma_abs_sup_error"] = abs_err;
  }
  if (truth.S) {
    out.truth_metrics["S_rel_l2_error"] = relative_l2_error(out.S, *truth.S, mask);
    out.truth_metrics["S_rel_sup_error"] = relative_sup_error(out.S, *truth.S, mask);
  }
  if (truth.T) {
    out.truth_metrics["T_sup_error"] = max_abs_diff(out.T, *truth.T);
  }
  if (truth.u) {
    double e = 0.0;
    const auto a = out.u.values();
    const auto b = truth.u->values();
    if (a.size() != b.size()) throw ValidationError("run_pipeline: truth radiance has a different layout");
    for (std::size_t k = 0; k < a.size(); ++k) e = std::max(e, std::abs(a[k] - b[k]));
    out.truth_metrics["u_sup_error"] = e;
  }
  return out;
}

double StabilityReport::band() const {
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (const StabilityRow& r : rows) {
    if (r.rhs <= 0.0) continue;
    lo = std::min(lo, r.ratio());
    hi = std::max(hi, r.ratio());
  }
  return hi > 0.0 ? hi / lo : 1.0;
}

StabilityReport stability_experiment(const ScalarField& sigma1, const ScalarField& sigma2,
                                     const ScalarField& mu, const AdmissibleData& data,
                                     const ForwardSettings& forward, const InverseSettings& inverse,
                                     const std::vector<double>& ladder) {
  require_same_grid(sigma1.grid(), sigma2.grid(), "stability_experiment");
  const GridPtr& grid = mu.grid_ptr();
  const double step = inverse.step > 0.0 ? inverse.step : default_step(*grid);

  auto emission_sinogram = [&](const ScalarField& sigma) {
    const ForwardSolution sol = forward_solve(sigma, mu, data, forward);
    const MeasurementFn m = simulated_measurement(mu, sol.source, data.u_B, step);
    return boundary_to_sinogram(m, data.u_B, mu, inverse.sino, step);
  };

  const Sinogram g1 = emission_sinogram(sigma1);
  StabilityReport rep;
  for (double t : ladder) {
    const ScalarField sigma2_t = sigma1 + t * (sigma2 - sigma1);
    const Sinogram dg = g1 - emission_sinogram(sigma2_t);
    const ScalarField inv = novikov_invert(dg, mu, grid, step);
    rep.rows.push_back({t, max_abs_diff(sigma1, sigma2_t), holder_norm(inv, data.gamma).norm()});
  }
  return rep;
}

}  // namespace rte
