#pragma once

#include <complex>
#include <memory>
#include <span>
#include <vector>

#include "rte/fields.hpp"

namespace rte {

/// Parallel-beam sampling. Line (s, theta) is { s theta_perp + t theta }, with
/// theta_perp = (-theta_2, theta_1), angles theta_k = 2 pi k / n_ang and
/// cell-centred offsets s_i = -s_max + (i + 1/2) ds, ds = 2 s_max / n_s.
struct SinogramShape {
  int n_s = 256;
  int n_ang = 256;
  double s_max = 1.2;

  double ds() const { return 2.0 * s_max / n_s; }
  double s(int i) const { return -s_max + (i + 0.5) * ds(); }
  double angle(int k) const;
  void validate() const;
  bool operator==(const SinogramShape&) const = default;
};

/// Samples of a line transform; value(i, k) lives at k * n_s + i.
class Sinogram {
 public:
  explicit Sinogram(SinogramShape shape);
  Sinogram(SinogramShape shape, std::vector<double> values);

  const SinogramShape& shape() const { return shape_; }
  double operator()(int i, int k) const { return values_[static_cast<std::size_t>(k) * shape_.n_s + i]; }
  double& operator()(int i, int k) { return values_[static_cast<std::size_t>(k) * shape_.n_s + i]; }
  std::span<const double> row(int k) const {
    return std::span<const double>(values_).subspan(static_cast<std::size_t>(k) * shape_.n_s, shape_.n_s);
  }
  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }
  double sup_abs() const;

 private:
  SinogramShape shape_;
  std::vector<double> values_;
};

Sinogram operator-(const Sinogram& a, const Sinogram& b);
Sinogram operator*(double s, const Sinogram& a);

/// Half-line integral of mu from x in direction theta, stopping where the ray
/// leaves the domain (mu vanishes outside it); trapezoid with `step`.
double divergent_beam(const ScalarField& mu, const Vec2& x, const Vec2& theta, double step);

/// Attenuated line integral of f along the line through `anchor` with
/// direction theta: int f(y) exp(-int_0^inf mu(y + eta theta) d eta) along
/// the line. The tail attenuation is accumulated from the far (+theta) end.
double atten_line(const ScalarField& mu, const ScalarField& f, const Vec2& anchor,
                  const Vec2& theta, double step);

/// Attenuated X-ray transform of f on the sinogram lattice. Rows with
/// |s| >= domain radius are zero.
Sinogram atten_xray(const ScalarField& mu, const ScalarField& f, const SinogramShape& shape,
                    double step);

/// FFT-based discrete Hilbert transform (1/pi) p.v. int g(t) / (s - t) dt of
/// uniformly spaced samples. The samples are zero-padded to four times their
/// length and convolved with the band-limited Hilbert kernel
/// (1 - cos(pi m)) / (pi m), whose spectrum is -i sign(frequency); the linear
/// convolution avoids wrap-around leakage.
class HilbertTransform {
 public:
  explicit HilbertTransform(int n);
  ~HilbertTransform();
  HilbertTransform(const HilbertTransform&) = delete;
  HilbertTransform& operator=(const HilbertTransform&) = delete;

  int size() const { return n_; }
  /// Thread-safe; `in` and `out` may alias.
  void apply(std::span<const std::complex<double>> in, std::span<std::complex<double>> out) const;
  std::vector<double> apply(std::span<const double> in) const;

 private:
  struct Plans;
  int n_;
  int padded_;
  std::vector<std::complex<double>> kernel_hat_;
  std::unique_ptr<Plans> plans_;
};

/// One-shot Hilbert transform. Requires at least 8 samples.
std::vector<double> hilbert(std::span<const double> samples);

/// Inversion of the 2-D attenuated X-ray transform with known attenuation,
/// in the form f = (1/4 pi) Re div int nu e^{D mu(x, theta)} w(nu, x . nu) d theta,
/// w = e^{-h} H(e^{h} g), h = (R mu + i H R mu) / 2, nu = -theta_perp, where
/// R mu is the unattenuated transform of mu and D mu the divergent beam.
/// The divergence is taken by central differences on the output grid.
/// Throws ValidationError for an inconsistent sinogram.
ScalarField novikov_invert(const Sinogram& sino, const ScalarField& mu, const GridPtr& grid,
                           double step);

}  // namespace rte
