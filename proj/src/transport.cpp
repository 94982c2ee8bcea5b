#include "rte/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>

#include "parallel.hpp"

namespace rte {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap_angle(double a) {
  a = std::fmod(a, kTwoPi);
  return a < 0.0 ? a + kTwoPi : a;
}

// Number of distinct lattice positions along one angle, if the angles sit on
// a regular lattice 2 pi i / n.
int lattice_count(const std::vector<double>& angles) {
  std::vector<double> sorted = angles;
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> distinct;
  for (double a : sorted) {
    if (distinct.empty() || a - distinct.back() > 1e-9) distinct.push_back(a);
  }
  const int n = static_cast<int>(distinct.size());
  if (n < 4) return 0;
  for (double a : distinct) {
    const double u = a * n / kTwoPi;
    if (std::abs(u - std::round(u)) > 1e-6) return 0;
  }
  return n;
}

}  // namespace

BoundaryTrace BoundaryTrace::constant(GammaSide side, double value) {
  if (!std::isfinite(value)) throw ValidationError("BoundaryTrace: constant must be finite");
  BoundaryTrace t;
  t.side_ = side;
  t.constant_ = value;
  return t;
}

TraceSample BoundaryTrace::sample_at(const DiskDomain& domain, const PhasePoint& p, double value) {
  return {domain.boundary_angle(p.x), wrap_angle(std::atan2(p.theta.y(), p.theta.x())), value};
}

BoundaryTrace BoundaryTrace::from_samples(GammaSide side, std::vector<TraceSample> samples) {
  BoundaryTrace t;
  t.side_ = side;
  for (TraceSample& s : samples) {
    if (!std::isfinite(s.value) || !std::isfinite(s.beta) || !std::isfinite(s.dir_angle)) {
      throw ValidationError("BoundaryTrace: non-finite sample");
    }
    s.beta = wrap_angle(s.beta);
    s.dir_angle = wrap_angle(s.dir_angle);
  }
  t.samples_ = std::move(samples);

  std::vector<double> betas, dirs;
  for (const TraceSample& s : t.samples_) {
    betas.push_back(s.beta);
    dirs.push_back(s.dir_angle);
  }
  const int nb = lattice_count(betas);
  const int nd = lattice_count(dirs);
  if (nb > 0 && nd > 0) {
    t.n_beta_ = nb;
    t.n_dir_ = nd;
    t.lattice_.assign(static_cast<std::size_t>(nb) * nd, std::numeric_limits<double>::quiet_NaN());
    for (const TraceSample& s : t.samples_) {
      const int i = static_cast<int>(std::lround(s.beta * nb / kTwoPi)) % nb;
      const int k = static_cast<int>(std::lround(s.dir_angle * nd / kTwoPi)) % nd;
      t.lattice_[static_cast<std::size_t>(i) * nd + k] = s.value;
    }
  }
  return t;
}

std::optional<double> BoundaryTrace::try_evaluate(const DiskDomain& domain,
                                                  const PhasePoint& p) const {
  if (constant_) return *constant_;
  if (!has_lattice()) return std::nullopt;
  const double u = domain.boundary_angle(p.x) * n_beta_ / kTwoPi;
  const double v = wrap_angle(std::atan2(p.theta.y(), p.theta.x())) * n_dir_ / kTwoPi;
  const int i0 = static_cast<int>(std::floor(u));
  const int k0 = static_cast<int>(std::floor(v));
  const double a = u - i0;
  const double b = v - k0;
  auto at = [&](int i, int k) {
    i = ((i % n_beta_) + n_beta_) % n_beta_;
    k = ((k % n_dir_) + n_dir_) % n_dir_;
    return lattice_[static_cast<std::size_t>(i) * n_dir_ + k];
  };
  // Missing corners (off the lattice side, near grazing directions) drop
  // out and the remaining weights are renormalised.
  double acc = 0.0;
  double wsum = 0.0;
  const double w[4] = {(1 - a) * (1 - b), a * (1 - b), (1 - a) * b, a * b};
  const int di[4] = {0, 1, 0, 1};
  const int dk[4] = {0, 0, 1, 1};
  for (int c = 0; c < 4; ++c) {
    if (w[c] == 0.0) continue;
    const double val = at(i0 + di[c], k0 + dk[c]);
    if (std::isnan(val)) continue;
    acc += w[c] * val;
    wsum += w[c];
  }
  if (wsum == 0.0) return std::nullopt;
  return acc / wsum;
}

double BoundaryTrace::evaluate(const DiskDomain& domain, const PhasePoint& p) const {
  if (auto v = try_evaluate(domain, p)) return *v;
  std::ostringstream msg;
  msg << "boundary trace has no coverage at beta=" << domain.boundary_angle(p.x)
      << " dir=" << wrap_angle(std::atan2(p.theta.y(), p.theta.x()));
  throw CoverageError(msg.str());
}

double BoundaryTrace::min_value() const {
  if (constant_) return *constant_;
  double m = std::numeric_limits<double>::infinity();
  for (const TraceSample& s : samples_) m = std::min(m, s.value);
  return m;
}

double BoundaryTrace::max_abs() const {
  if (constant_) return std::abs(*constant_);
  double m = 0.0;
  for (const TraceSample& s : samples_) m = std::max(m, std::abs(s.value));
  return m;
}

double ray_quadrature(const ScalarField& g, const Vec2& x, const Vec2& theta, double t0, double t1,
                      double step) {
  if (!(step > 0.0)) throw ValidationError("ray_quadrature: step must be positive");
  if (t1 < t0) throw ValidationError("ray_quadrature: need t0 <= t1");
  if (t1 == t0) return 0.0;
  const int n = static_cast<int>(std::ceil((t1 - t0) / step));
  const double dt = (t1 - t0) / n;
  double acc = 0.5 * (interp(g, x + t0 * theta) + interp(g, x + t1 * theta));
  for (int j = 1; j < n; ++j) acc += interp(g, x + (t0 + j * dt) * theta);
  return acc * dt;
}

CharacteristicValue characteristic(const ScalarField& mu, const ScalarField* source,
                                   const BoundaryTrace& u_B, const PhasePoint& p, double step) {
  const DiskDomain& domain = mu.grid().domain();
  const BackwardExit ex = exit_backward(domain, p, 1e-9);
  CharacteristicValue out;
  const double boundary_value = u_B.evaluate(domain, {ex.x_minus, p.theta});
  if (ex.tau == 0.0) {
    out.ballistic = boundary_value;
    return out;
  }
  const int n = std::max(1, static_cast<int>(std::ceil(ex.tau / step)));
  const double ds = ex.tau / n;
  double atten = 0.0;
  double mu_prev = interp(mu, p.x);
  double emission = source ? 0.5 * interp(*source, p.x) : 0.0;
  for (int j = 1; j <= n; ++j) {
    const Vec2 y = p.x - (j * ds) * p.theta;
    const double mu_j = interp(mu, y);
    atten += 0.5 * ds * (mu_prev + mu_j);
    mu_prev = mu_j;
    if (source) {
      const double w = (j == n) ? 0.5 : 1.0;
      emission += w * std::exp(-atten) * interp(*source, y);
    }
  }
  out.emission = emission * ds;
  out.ballistic = std::exp(-atten) * boundary_value;
  return out;
}

void require_nonnegative(const ScalarField& mu, const char* where) {
  for (std::size_t idx : mu.grid().active_nodes()) {
    if (mu[idx] < 0.0 || !std::isfinite(mu[idx])) {
      std::ostringstream msg;
      msg << where << ": attenuation must be finite and nonnegative (node " << idx
          << " holds " << mu[idx] << ")";
      throw ValidationError(msg.str());
    }
  }
}

AngularField transport_solve(const ScalarField& mu, const ScalarField& source,
                             const BoundaryTrace& u_B, int n_dir, double step) {
  require_same_grid(mu.grid(), source.grid(), "transport_solve");
  require_nonnegative(mu, "transport_solve");
  if (!(step > 0.0)) throw ValidationError("transport_solve: step must be positive");
  const bool has_source = sup_abs(source) > 0.0;
  AngularField u(mu.grid_ptr(), n_dir);
  const auto& nodes = mu.grid().active_nodes();
  std::vector<Vec2> dirs(n_dir);
  for (int k = 0; k < n_dir; ++k) dirs[k] = u.theta(k);
  const long count = static_cast<long>(nodes.size());
  detail::parallel_for(count, 64, [&](long a) {
    const std::size_t idx = nodes[a];
    const Vec2 x = mu.grid().node(idx);
    for (int k = 0; k < n_dir; ++k) {
      u(idx, k) = characteristic(mu, has_source ? &source : nullptr, u_B, {x, dirs[k]}, step).total();
    }
  });
  return u;
}

BoundaryTrace trace_outgoing(const ScalarField& mu, const ScalarField& source,
                             const BoundaryTrace& u_B, std::span<const PhasePoint> points,
                             double step) {
  require_same_grid(mu.grid(), source.grid(), "trace_outgoing");
  require_nonnegative(mu, "trace_outgoing");
  const DiskDomain& domain = mu.grid().domain();
  for (const PhasePoint& p : points) {
    if (std::abs(domain.level(p.x)) > 1e-9 || !in_gamma(domain, p, GammaSide::plus)) {
      std::ostringstream msg;
      msg << "trace_outgoing: (" << p.x.x() << ", " << p.x.y() << "; " << p.theta.x() << ", "
          << p.theta.y() << ") is not in Gamma_+";
      throw DomainError(msg.str());
    }
  }
  const bool has_source = sup_abs(source) > 0.0;
  std::vector<TraceSample> samples(points.size());
  const long count = static_cast<long>(points.size());
  detail::parallel_for(count, 64, [&](long a) {
    const PhasePoint& p = points[a];
    const double v = characteristic(mu, has_source ? &source : nullptr, u_B, p, step).total();
    samples[a] = BoundaryTrace::sample_at(domain, p, v);
  });
  return BoundaryTrace::from_samples(GammaSide::plus, std::move(samples));
}

double transport_residual(const AngularField& u, const ScalarField& mu, const ScalarField& source,
                          double step) {
  const Grid2& g = u.grid();
  require_same_grid(g, mu.grid(), "transport_residual");
  const double h = g.h();
  const int nd = u.n_dir();
  const auto& nodes = g.active_nodes();
  double worst = 0.0;
  const long count = static_cast<long>(nodes.size());
#pragma omp parallel for schedule(dynamic, 64) reduction(max : worst)
  for (long a = 0; a < count; ++a) {
    const std::size_t idx = nodes[a];
    const Vec2 x = g.node(idx);
    for (int k = 0; k < nd; ++k) {
      const Vec2 theta = u.theta(k);
      const Vec2 y = x - h * theta;
      const double fu = (y.x() - g.origin().x()) / h;
      const double fv = (y.y() - g.origin().y()) / h;
      const int i = static_cast<int>(std::floor(fu));
      const int j = static_cast<int>(std::floor(fv));
      if (i < 0 || j < 0 || i + 1 >= g.nx() || j + 1 >= g.ny()) continue;
      const std::size_t c = g.index(i, j);
      const std::size_t corners[4] = {c, c + 1, c + g.nx(), c + g.nx() + 1};
      bool ok = true;
      for (std::size_t cc : corners) ok = ok && g.active(cc);
      if (!ok) continue;
      const double wa = fu - i;
      const double wb = fv - j;
      const double upstream = (1 - wa) * (1 - wb) * u(corners[0], k) + wa * (1 - wb) * u(corners[1], k) +
                              (1 - wa) * wb * u(corners[2], k) + wa * wb * u(corners[3], k);
      // one-cell characteristic update from y to x
      const int n = std::max(1, static_cast<int>(std::ceil(h / step)));
      const double ds = h / n;
      double atten = 0.0;
      double mu_prev = interp(mu, x);
      double emission = 0.5 * interp(source, x);
      for (int s = 1; s <= n; ++s) {
        const Vec2 z = x - (s * ds) * theta;
        const double mu_s = interp(mu, z);
        atten += 0.5 * ds * (mu_prev + mu_s);
        mu_prev = mu_s;
        emission += (s == n ? 0.5 : 1.0) * std::exp(-atten) * interp(source, z);
      }
      const double predicted = std::exp(-atten) * upstream + emission * ds;
      worst = std::max(worst, std::abs(u(idx, k) - predicted));
    }
  }
  return worst;
}

}  // namespace rte
