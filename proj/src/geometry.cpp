#include "rte/geometry.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "rte/errors.hpp"

namespace rte {

double DiskDomain::boundary_angle(const Vec2& x) const {
  const Vec2 y = x - center;
  double beta = std::atan2(y.y(), y.x());
  if (beta < 0.0) beta += 2.0 * std::numbers::pi;
  return beta;
}

BackwardExit exit_backward(const DiskDomain& domain, const PhasePoint& p, double tol_geom) {
  if (domain.level(p.x) > tol_geom) {
    std::ostringstream msg;
    msg << "exit_backward: point (" << p.x.x() << ", " << p.x.y()
        << ") lies outside the domain (level " << domain.level(p.x) << ")";
    throw DomainError(msg.str());
  }
  const Vec2 y = p.x - domain.center;
  const double b = y.dot(p.theta);
  const double disc = std::max(0.0, b * b - domain.level(p.x));
  const double tau = std::max(0.0, b + std::sqrt(disc));
  return {tau, p.x - tau * p.theta};
}

std::optional<std::pair<double, double>> chord(const DiskDomain& domain, const Vec2& x,
                                               const Vec2& theta) {
  // |y + t theta|^2 = r^2 with |theta| = 1
  const Vec2 y = x - domain.center;
  const double b = y.dot(theta);
  const double disc = b * b - domain.level(x);
  if (disc <= 0.0) return std::nullopt;
  const double root = std::sqrt(disc);
  return std::make_pair(-b - root, -b + root);
}

const char* to_string(GammaSide side) { return side == GammaSide::minus ? "minus" : "plus"; }

bool in_gamma(const DiskDomain& domain, const PhasePoint& p, GammaSide side, double tol_graze) {
  const double dn = p.theta.dot(domain.normal(p.x));
  return side == GammaSide::plus ? dn > tol_graze : dn < -tol_graze;
}

std::vector<PhasePoint> sample_gamma(const DiskDomain& domain, int n_boundary, int n_dir,
                                     GammaSide side, double tol_graze) {
  if (n_boundary < 4 || n_dir < 4) {
    throw ValidationError("sample_gamma: n_boundary and n_dir must be at least 4");
  }
  std::vector<PhasePoint> out;
  out.reserve(static_cast<std::size_t>(n_boundary) * n_dir / 2);
  for (int i = 0; i < n_boundary; ++i) {
    const double beta = 2.0 * std::numbers::pi * i / n_boundary;
    const Vec2 x = domain.boundary_point(beta);
    for (int k = 0; k < n_dir; ++k) {
      const PhasePoint p{x, direction(2.0 * std::numbers::pi * k / n_dir)};
      if (in_gamma(domain, p, side, tol_graze)) out.push_back(p);
    }
  }
  return out;
}

}  // namespace rte
