#pragma once

#include <optional>
#include <span>
#include <vector>

#include "rte/fields.hpp"
#include "rte/geometry.hpp"

namespace rte {

struct TraceSample {
  double beta;       // boundary angle of x
  double dir_angle;  // polar angle of theta
  double value;
};

/// A function on one half of the phase-space boundary: either a constant or
/// a table of samples. Tables laid out on a regular (beta, dir_angle) lattice
/// are evaluated by periodic bilinear interpolation in both angles.
class BoundaryTrace {
 public:
  static BoundaryTrace constant(GammaSide side, double value);
  /// Accepts arbitrary samples; builds the interpolation lattice when the
  /// sample angles sit on one. Throws ValidationError on non-finite values.
  static BoundaryTrace from_samples(GammaSide side, std::vector<TraceSample> samples);

  /// Samples f on sample_gamma(domain, n_beta, n_dir, side).
  template <class F>
  static BoundaryTrace tabulate(const DiskDomain& domain, GammaSide side, int n_beta, int n_dir,
                                F&& f) {
    std::vector<TraceSample> samples;
    for (const PhasePoint& p : sample_gamma(domain, n_beta, n_dir, side)) {
      samples.push_back(sample_at(domain, p, f(p)));
    }
    return from_samples(side, std::move(samples));
  }

  static TraceSample sample_at(const DiskDomain& domain, const PhasePoint& p, double value);

  GammaSide side() const { return side_; }
  bool is_constant() const { return constant_.has_value(); }
  double constant_value() const { return constant_.value_or(0.0); }
  const std::vector<TraceSample>& samples() const { return samples_; }
  bool has_lattice() const { return n_beta_ > 0; }

  /// Value at boundary point x in direction theta: bilinear over the lattice
  /// neighbours that are present, renormalised; nullopt when none is.
  std::optional<double> try_evaluate(const DiskDomain& domain, const PhasePoint& p) const;
  /// As try_evaluate, throwing CoverageError on a gap.
  double evaluate(const DiskDomain& domain, const PhasePoint& p) const;

  double min_value() const;
  double max_abs() const;

 private:
  GammaSide side_ = GammaSide::minus;
  std::optional<double> constant_;
  std::vector<TraceSample> samples_;
  int n_beta_ = 0;
  int n_dir_ = 0;
  std::vector<double> lattice_;  // n_beta x n_dir, NaN where absent
};

/// Default marching step: half the grid spacing.
inline double default_step(const Grid2& grid) { return 0.5 * grid.h(); }

/// Composite trapezoid for the integral of g(x + t theta) over [t0, t1] with
/// ceil((t1 - t0) / step) equal intervals.
double ray_quadrature(const ScalarField& g, const Vec2& x, const Vec2& theta, double t0, double t1,
                      double step);

/// The two terms of the characteristic solution at a phase point.
struct CharacteristicValue {
  double ballistic = 0.0;  // exp(-int_0^tau mu) u_B(x_-, theta)
  double emission = 0.0;   // int_0^tau exp(-int_0^s mu) S(x - s theta) ds
  double total() const { return ballistic + emission; }
};

/// Solution of theta . grad u + mu u = S with u = u_B on Gamma_-, evaluated
/// at one point of the closed domain by a single backward sweep along the
/// characteristic. `source` may be null for S = 0.
CharacteristicValue characteristic(const ScalarField& mu, const ScalarField* source,
                                   const BoundaryTrace& u_B, const PhasePoint& p, double step);

/// Characteristic solution at every non-exterior node and n_dir directions.
/// Throws ValidationError when mu has a negative node.
AngularField transport_solve(const ScalarField& mu, const ScalarField& source,
                             const BoundaryTrace& u_B, int n_dir, double step);

/// Outgoing trace at the requested Gamma_+ points, integrating each ray
/// afresh. Throws DomainError for a point not in Gamma_+.
BoundaryTrace trace_outgoing(const ScalarField& mu, const ScalarField& source,
                             const BoundaryTrace& u_B, std::span<const PhasePoint> points,
                             double step);

/// Integral-form residual of a computed radiance: the largest mismatch over
/// nodes and directions between u(x, theta) and the one-cell characteristic
/// update from the bilinearly interpolated u(x - h theta, theta). Nodes whose
/// upstream cell touches an exterior node are skipped.
double transport_residual(const AngularField& u, const ScalarField& mu, const ScalarField& source,
                          double step);

void require_nonnegative(const ScalarField& mu, const char* where);

}  // namespace rte
