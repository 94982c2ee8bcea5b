#pragma once

#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace rte {

using Vec2 = Eigen::Vector2d;

/// Unit vector at polar angle `angle`.
inline Vec2 direction(double angle) { return {std::cos(angle), std::sin(angle)}; }

/// Counter-clockwise rotation by a quarter turn: (-v2, v1).
inline Vec2 perp(const Vec2& v) { return {-v.y(), v.x()}; }

/// The strictly convex domain: a disk described by the level-set function
/// xi(x) = |x - c|^2 - r^2, negative inside and zero on the boundary.
struct DiskDomain {
  Vec2 center{0.0, 0.0};
  double radius = 1.0;

  double diameter() const { return 2.0 * radius; }
  double level(const Vec2& x) const { return (x - center).squaredNorm() - radius * radius; }
  /// Outward unit normal, evaluated at the radial projection of x.
  Vec2 normal(const Vec2& x) const { return (x - center).normalized(); }
  /// Lower bound of the Hessian quadratic form of `level`; 2 for every disk.
  static constexpr double convexity() { return 2.0; }
  /// Polar angle of x about the center.
  double boundary_angle(const Vec2& x) const;
  Vec2 boundary_point(double beta) const { return center + radius * direction(beta); }
};

/// A point of phase space: position and unit direction.
struct PhasePoint {
  Vec2 x;
  Vec2 theta;
};

struct BackwardExit {
  double tau;      // backward exit time
  Vec2 x_minus;    // x - tau * theta, on the boundary
};

/// Backward exit time and position of the characteristic through (x, theta).
/// Throws DomainError when x lies outside the closed domain by more than
/// `tol_geom` in the level-set function.
BackwardExit exit_backward(const DiskDomain& domain, const PhasePoint& p, double tol_geom = 1e-12);

/// Parameter interval [t_in, t_out] on which x + t*theta lies in the closed
/// disk, or nullopt when the line misses it.
std::optional<std::pair<double, double>> chord(const DiskDomain& domain, const Vec2& x,
                                               const Vec2& theta);

enum class GammaSide { minus, plus };

const char* to_string(GammaSide side);

/// Strict membership in Gamma_- (theta.n < -tol) or Gamma_+ (theta.n > tol).
bool in_gamma(const DiskDomain& domain, const PhasePoint& p, GammaSide side,
              double tol_graze = 1e-8);

/// Boundary points at uniform angles beta_i = 2 pi i / n_boundary paired with
/// directions at uniform angles 2 pi k / n_dir, keeping only the pairs that
/// belong to the requested half of the phase-space boundary.
std::vector<PhasePoint> sample_gamma(const DiskDomain& domain, int n_boundary, int n_dir,
                                     GammaSide side, double tol_graze = 1e-8);

}  // namespace rte
