#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <sstream>
#include <vector>

#include "rte/errors.hpp"
#include "rte/geometry.hpp"

namespace rte {

enum class NodeKind : std::uint8_t { exterior, boundary_adjacent, interior };

/// Uniform Cartesian grid over a box containing the closed domain. Node (i, j)
/// sits at origin + h * (i, j); storage is row-major with i fastest.
///
/// A node is exterior when it lies outside the disk or within 1e-3 h of its
/// boundary, boundary-adjacent when it is inside but one of its four
/// neighbours is exterior, and interior otherwise.
class Grid2 {
 public:
  Grid2(int nx, int ny, double h, Vec2 origin, DiskDomain domain = {});

  /// Square n x n grid covering [c - r - 2h, c + r + 2h]^2.
  static std::shared_ptr<const Grid2> covering(const DiskDomain& domain, int n);

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  std::size_t size() const { return static_cast<std::size_t>(nx_) * ny_; }
  double h() const { return h_; }
  const Vec2& origin() const { return origin_; }
  const DiskDomain& domain() const { return domain_; }

  std::size_t index(int i, int j) const { return static_cast<std::size_t>(j) * nx_ + i; }
  Vec2 node(int i, int j) const { return {origin_.x() + i * h_, origin_.y() + j * h_}; }
  Vec2 node(std::size_t idx) const {
    return node(static_cast<int>(idx % nx_), static_cast<int>(idx / nx_));
  }
  NodeKind kind(std::size_t idx) const { return kinds_[idx]; }
  bool active(std::size_t idx) const { return kinds_[idx] != NodeKind::exterior; }
  /// Indices of all non-exterior nodes, ascending.
  const std::vector<std::size_t>& active_nodes() const { return active_; }

  bool in_bounds(const Vec2& x) const;
  bool same_layout(const Grid2& other) const;

 private:
  int nx_;
  int ny_;
  double h_;
  Vec2 origin_;
  DiskDomain domain_;
  std::vector<NodeKind> kinds_;
  std::vector<std::size_t> active_;
};

using GridPtr = std::shared_ptr<const Grid2>;

/// Real function sampled at grid nodes. Exterior nodes hold zero, which is
/// the extension by zero of compactly supported coefficients.
class ScalarField {
 public:
  explicit ScalarField(GridPtr grid);
  ScalarField(GridPtr grid, std::vector<double> values);

  /// Samples f at every non-exterior node.
  template <class F>
  static ScalarField from_function(GridPtr grid, F&& f) {
    ScalarField out(grid);
    for (std::size_t idx : grid->active_nodes()) out.values_[idx] = f(grid->node(idx));
    return out;
  }

  const Grid2& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  std::size_t size() const { return values_.size(); }

  double operator[](std::size_t idx) const { return values_[idx]; }
  double& operator[](std::size_t idx) { return values_[idx]; }
  double at(int i, int j) const { return values_[grid_->index(i, j)]; }

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  void zero_exterior();

 private:
  GridPtr grid_;
  std::vector<double> values_;
};

/// Radiance sampled at grid nodes and n_dir uniform directions
/// theta_k = (cos 2 pi k / n_dir, sin 2 pi k / n_dir). Directions are
/// contiguous per node: value(node, k) lives at node * n_dir + k.
class AngularField {
 public:
  AngularField(GridPtr grid, int n_dir);

  const Grid2& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  int n_dir() const { return n_dir_; }
  double angle(int k) const;
  Vec2 theta(int k) const { return direction(angle(k)); }

  double operator()(std::size_t node, int k) const { return values_[node * n_dir_ + k]; }
  double& operator()(std::size_t node, int k) { return values_[node * n_dir_ + k]; }

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

 private:
  GridPtr grid_;
  int n_dir_;
  std::vector<double> values_;
};

// Elementwise helpers. Operands must share a grid layout.
ScalarField operator+(const ScalarField& a, const ScalarField& b);
ScalarField operator-(const ScalarField& a, const ScalarField& b);
ScalarField operator*(double s, const ScalarField& a);
AngularField operator+(const AngularField& a, const AngularField& b);
double sup_abs(const ScalarField& f);
double sup_abs(const AngularField& u);
double max_abs_diff(const ScalarField& a, const ScalarField& b);
double min_active(const ScalarField& f);
double min_active(const AngularField& u);

void require_same_grid(const Grid2& a, const Grid2& b, const char* where);

/// Bilinear interpolation. Exact for affine functions.
inline double interp(const ScalarField& f, const Vec2& x) {
  const Grid2& g = f.grid();
  const double u = (x.x() - g.origin().x()) / g.h();
  const double v = (x.y() - g.origin().y()) / g.h();
  const double eps = 1e-9;
  if (!(u >= -eps && v >= -eps && u <= g.nx() - 1 + eps && v <= g.ny() - 1 + eps)) {
    std::ostringstream msg;
    msg << "interp: point (" << x.x() << ", " << x.y() << ") outside grid bounds";
    throw DomainError(msg.str());
  }
  int i = std::min(std::max(static_cast<int>(std::floor(u)), 0), g.nx() - 2);
  int j = std::min(std::max(static_cast<int>(std::floor(v)), 0), g.ny() - 2);
  const double a = u - i;
  const double b = v - j;
  const std::size_t k = g.index(i, j);
  const auto vals = f.values();
  const std::size_t nx = static_cast<std::size_t>(g.nx());
  return (1 - a) * (1 - b) * vals[k] + a * (1 - b) * vals[k + 1] + (1 - a) * b * vals[k + nx] +
         a * b * vals[k + nx + 1];
}

/// Uniform mean over the stored directions (periodic trapezoid on S^1).
ScalarField angular_average(const AngularField& u);

struct HolderNorm {
  double sup = 0.0;
  double seminorm = 0.0;
  double norm() const { return sup + seminorm; }
};

inline constexpr std::size_t kDefaultPairBudget = 20'000'000;

/// Discrete C^{0,gamma} norm over non-exterior nodes. Uses every node pair when
/// their number is within `pair_budget`, otherwise all pairs among every
/// stride-th node with the smallest stride that fits; the subsampled value is
/// a lower bound of the full one.
HolderNorm holder_norm(const ScalarField& f, double gamma,
                       std::size_t pair_budget = kDefaultPairBudget);

struct Bump {
  Vec2 center;
  double amplitude;
  double width;
};

/// background * chi + sum of Gaussian bumps * chi, where chi is a quintic
/// smoothstep cutoff in |x| equal to 1 for |x| <= support_radius and 0 for
/// |x| >= (1 + support_radius) / 2.
struct PhantomSpec {
  double background = 0.0;
  std::vector<Bump> bumps;
  double support_radius = 0.8;

  double cutoff(double r) const;
  double value(const Vec2& x) const;
  /// Throws ValidationError unless support_radius is in (0, 1) and every bump
  /// satisfies |c| + 3 w <= 1 with w > 0.
  void validate() const;

  static PhantomSpec default_mu();
  static PhantomSpec default_sigma();
};

struct PhantomReport {
  double min_on_support = 0.0;  // min over active nodes with |x| <= support_radius
  double max = 0.0;
  HolderNorm holder;
};

struct Phantom {
  ScalarField field;
  PhantomReport report;
};

Phantom eval_phantom(const PhantomSpec& spec, const GridPtr& grid, double gamma = 0.5,
                     std::size_t pair_budget = kDefaultPairBudget);

}  // namespace rte
