#include "rte/fields.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace rte {

Grid2::Grid2(int nx, int ny, double h, Vec2 origin, DiskDomain domain)
    : nx_(nx), ny_(ny), h_(h), origin_(std::move(origin)), domain_(domain) {
  if (nx < 4 || ny < 4 || !(h > 0.0)) throw ValidationError("Grid2: need nx, ny >= 4 and h > 0");
  const double inner = domain_.radius - 1e-3 * h_;
  std::vector<char> inside(size());
  for (int j = 0; j < ny_; ++j) {
    for (int i = 0; i < nx_; ++i) {
      inside[index(i, j)] = (node(i, j) - domain_.center).norm() < inner;
    }
  }
  kinds_.assign(size(), NodeKind::exterior);
  for (int j = 0; j < ny_; ++j) {
    for (int i = 0; i < nx_; ++i) {
      const std::size_t k = index(i, j);
      if (!inside[k]) continue;
      const bool all_in = i > 0 && j > 0 && i < nx_ - 1 && j < ny_ - 1 && inside[k - 1] &&
                          inside[k + 1] && inside[k - nx_] && inside[k + nx_];
      kinds_[k] = all_in ? NodeKind::interior : NodeKind::boundary_adjacent;
      active_.push_back(k);
    }
  }
}

std::shared_ptr<const Grid2> Grid2::covering(const DiskDomain& domain, int n) {
  if (n < 8) throw ValidationError("Grid2::covering: need at least 8 nodes per side");
  // n - 1 intervals span 2r + 4h
  const double h = 2.0 * domain.radius / (n - 5);
  const Vec2 origin = domain.center - Vec2(domain.radius + 2 * h, domain.radius + 2 * h);
  return std::make_shared<const Grid2>(n, n, h, origin, domain);
}

bool Grid2::in_bounds(const Vec2& x) const {
  const double u = (x.x() - origin_.x()) / h_;
  const double v = (x.y() - origin_.y()) / h_;
  return u >= 0.0 && v >= 0.0 && u <= nx_ - 1 && v <= ny_ - 1;
}

bool Grid2::same_layout(const Grid2& other) const {
  return nx_ == other.nx_ && ny_ == other.ny_ && h_ == other.h_ && origin_ == other.origin_ &&
         domain_.center == other.domain_.center && domain_.radius == other.domain_.radius;
}

void require_same_grid(const Grid2& a, const Grid2& b, const char* where) {
  if (&a != &b && !a.same_layout(b)) {
    throw ValidationError(std::string(where) + ": fields live on different grids");
  }
}

ScalarField::ScalarField(GridPtr grid) : grid_(std::move(grid)), values_(grid_->size(), 0.0) {}

ScalarField::ScalarField(GridPtr grid, std::vector<double> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  if (values_.size() != grid_->size()) {
    throw ValidationError("ScalarField: value count does not match the grid");
  }
}

void ScalarField::zero_exterior() {
  for (std::size_t k = 0; k < values_.size(); ++k) {
    if (!grid_->active(k)) values_[k] = 0.0;
  }
}

AngularField::AngularField(GridPtr grid, int n_dir)
    : grid_(std::move(grid)), n_dir_(n_dir), values_(grid_->size() * n_dir, 0.0) {
  if (n_dir < 4) throw ValidationError("AngularField: n_dir must be at least 4");
}

double AngularField::angle(int k) const { return 2.0 * std::numbers::pi * k / n_dir_; }

ScalarField operator+(const ScalarField& a, const ScalarField& b) {
  require_same_grid(a.grid(), b.grid(), "operator+");
  ScalarField out(a.grid_ptr());
  for (std::size_t k = 0; k < a.size(); ++k) out[k] = a[k] + b[k];
  return out;
}

ScalarField operator-(const ScalarField& a, const ScalarField& b) {
  require_same_grid(a.grid(), b.grid(), "operator-");
  ScalarField out(a.grid_ptr());
  for (std::size_t k = 0; k < a.size(); ++k) out[k] = a[k] - b[k];
  return out;
}

ScalarField operator*(double s, const ScalarField& a) {
  ScalarField out(a.grid_ptr());
  for (std::size_t k = 0; k < a.size(); ++k) out[k] = s * a[k];
  return out;
}

AngularField operator+(const AngularField& a, const AngularField& b) {
  require_same_grid(a.grid(), b.grid(), "operator+");
  if (a.n_dir() != b.n_dir()) throw ValidationError("operator+: direction counts differ");
  AngularField out(a.grid_ptr(), a.n_dir());
  auto o = out.values();
  auto x = a.values();
  auto y = b.values();
  for (std::size_t k = 0; k < o.size(); ++k) o[k] = x[k] + y[k];
  return out;
}

double sup_abs(const ScalarField& f) {
  double m = 0.0;
  for (std::size_t idx : f.grid().active_nodes()) m = std::max(m, std::abs(f[idx]));
  return m;
}

double sup_abs(const AngularField& u) {
  double m = 0.0;
  for (std::size_t idx : u.grid().active_nodes()) {
    for (int k = 0; k < u.n_dir(); ++k) m = std::max(m, std::abs(u(idx, k)));
  }
  return m;
}

double max_abs_diff(const ScalarField& a, const ScalarField& b) {
  require_same_grid(a.grid(), b.grid(), "max_abs_diff");
  double m = 0.0;
  for (std::size_t idx : a.grid().active_nodes()) m = std::max(m, std::abs(a[idx] - b[idx]));
  return m;
}

double min_active(const ScalarField& f) {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t idx : f.grid().active_nodes()) m = std::min(m, f[idx]);
  return m;
}

double min_active(const AngularField& u) {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t idx : u.grid().active_nodes()) {
    for (int k = 0; k < u.n_dir(); ++k) m = std::min(m, u(idx, k));
  }
  return m;
}

ScalarField angular_average(const AngularField& u) {
  ScalarField out(u.grid_ptr());
  const int n = u.n_dir();
  for (std::size_t idx : u.grid().active_nodes()) {
    double acc = 0.0;
    for (int k = 0; k < n; ++k) acc += u(idx, k);
    out[idx] = acc / n;
  }
  return out;
}

HolderNorm holder_norm(const ScalarField& f, double gamma, std::size_t pair_budget) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw ValidationError("holder_norm: gamma must be in (0, 1)");
  const Grid2& g = f.grid();
  const auto& all = g.active_nodes();
  HolderNorm out;
  for (std::size_t idx : all) out.sup = std::max(out.sup, std::abs(f[idx]));

  const std::size_t m = all.size();
  std::size_t stride = 1;
  auto pairs = [](std::size_t n) { return n < 2 ? std::size_t{0} : n * (n - 1) / 2; };
  while (pairs((m + stride - 1) / stride) > pair_budget) ++stride;

  std::vector<std::size_t> nodes;
  for (std::size_t p = 0; p < m; p += stride) nodes.push_back(all[p]);
  std::vector<Vec2> pos(nodes.size());
  std::vector<double> val(nodes.size());
  for (std::size_t p = 0; p < nodes.size(); ++p) {
    pos[p] = g.node(nodes[p]);
    val[p] = f[nodes[p]];
  }

  const double half_gamma = 0.5 * gamma;
  const bool root4 = gamma == 0.5;
  double best = 0.0;
  const long n = static_cast<long>(nodes.size());
#pragma omp parallel for schedule(dynamic, 16) reduction(max : best)
  for (long a = 0; a < n; ++a) {
    for (long b = a + 1; b < n; ++b) {
      const double df = std::abs(val[a] - val[b]);
      if (df == 0.0) continue;
      const double d2 = (pos[a] - pos[b]).squaredNorm();
      const double denom = root4 ? std::sqrt(std::sqrt(d2)) : std::pow(d2, half_gamma);
      best = std::max(best, df / denom);
    }
  }
  out.seminorm = best;
  return out;
}

double PhantomSpec::cutoff(double r) const {
  const double r1 = 0.5 * (1.0 + support_radius);
  if (r <= support_radius) return 1.0;
  if (r >= r1) return 0.0;
  const double t = (r1 - r) / (r1 - support_radius);
  return t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
}

double PhantomSpec::value(const Vec2& x) const {
  const double chi = cutoff(x.norm());
  if (chi == 0.0) return 0.0;
  double v = background;
  for (const Bump& b : bumps) {
    v += b.amplitude * std::exp(-(x - b.center).squaredNorm() / (2.0 * b.width * b.width));
  }
  return v * chi;
}

void PhantomSpec::validate() const {
  if (!(support_radius > 0.0 && support_radius < 1.0)) {
    throw ValidationError("phantom: support_radius must lie in (0, 1)");
  }
  for (const Bump& b : bumps) {
    if (!(b.width > 0.0)) throw ValidationError("phantom: bump width must be positive");
    if (b.center.norm() + 3.0 * b.width > 1.0) {
      throw ValidationError("phantom: bump extends past the domain (|c| + 3w > 1)");
    }
  }
}

PhantomSpec PhantomSpec::default_mu() { return {0.2, {{Vec2(0.2, 0.1), 0.3, 0.2}}, 0.8}; }

PhantomSpec PhantomSpec::default_sigma() {
  return {0.1, {{Vec2(-0.3, -0.2), 0.15, 0.15}}, 0.8};
}

Phantom eval_phantom(const PhantomSpec& spec, const GridPtr& grid, double gamma,
                     std::size_t pair_budget) {
  spec.validate();
  ScalarField f = ScalarField::from_function(grid, [&](const Vec2& x) { return spec.value(x); });
  PhantomReport rep;
  rep.min_on_support = std::numeric_limits<double>::infinity();
  rep.max = -std::numeric_limits<double>::infinity();
  for (std::size_t idx : grid->active_nodes()) {
    rep.max = std::max(rep.max, f[idx]);
    if (grid->node(idx).norm() <= spec.support_radius) {
      rep.min_on_support = std::min(rep.min_on_support, f[idx]);
    }
  }
  rep.holder = holder_norm(f, gamma, pair_budget);
  return {std::move(f), rep};
}

}  // namespace rte
