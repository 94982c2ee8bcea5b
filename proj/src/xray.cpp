#include "rte/xray.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include <fftw3.h>

#include "parallel.hpp"

#include "rte/transport.hpp"

namespace rte {

namespace {
constexpr double kPi = std::numbers::pi;
using cplx = std::complex<double>;
}  // namespace

double SinogramShape::angle(int k) const { return 2.0 * kPi * k / n_ang; }

void SinogramShape::validate() const {
  if (n_s < 8 || n_ang < 4 || !(s_max > 0.0)) {
    throw ValidationError("sinogram shape: need n_s >= 8, n_ang >= 4 and s_max > 0");
  }
}

Sinogram::Sinogram(SinogramShape shape)
    : shape_(shape), values_(static_cast<std::size_t>(shape.n_s) * shape.n_ang, 0.0) {
  shape_.validate();
}

Sinogram::Sinogram(SinogramShape shape, std::vector<double> values)
    : shape_(shape), values_(std::move(values)) {
  shape_.validate();
  if (values_.size() != static_cast<std::size_t>(shape_.n_s) * shape_.n_ang) {
    throw ValidationError("Sinogram: value count does not match n_s * n_ang");
  }
}

double Sinogram::sup_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

Sinogram operator-(const Sinogram& a, const Sinogram& b) {
  if (!(a.shape() == b.shape())) throw ValidationError("Sinogram difference: shapes differ");
  Sinogram out(a.shape());
  for (std::size_t k = 0; k < out.values().size(); ++k) out.values()[k] = a.values()[k] - b.values()[k];
  return out;
}

Sinogram operator*(double s, const Sinogram& a) {
  Sinogram out(a.shape());
  for (std::size_t k = 0; k < out.values().size(); ++k) out.values()[k] = s * a.values()[k];
  return out;
}

double divergent_beam(const ScalarField& mu, const Vec2& x, const Vec2& theta, double step) {
  const auto span = chord(mu.grid().domain(), x, theta);
  if (!span || span->second <= 0.0) return 0.0;
  return ray_quadrature(mu, x, theta, std::max(0.0, span->first), span->second, step);
}

double atten_line(const ScalarField& mu, const ScalarField& f, const Vec2& anchor,
                  const Vec2& theta, double step) {
  if (!(step > 0.0)) throw ValidationError("atten_line: step must be positive");
  const auto span = chord(f.grid().domain(), anchor, theta);
  if (!span) return 0.0;
  const auto [t0, t1] = *span;
  const int n = std::max(1, static_cast<int>(std::ceil((t1 - t0) / step)));
  const double dt = (t1 - t0) / n;
  // sweep from the far end: tail(t) = int_t^{t1} mu
  double tail = 0.0;
  Vec2 y = anchor + t1 * theta;
  double mu_next = interp(mu, y);
  double acc = 0.5 * interp(f, y);
  for (int j = n - 1; j >= 0; --j) {
    y = anchor + (t0 + j * dt) * theta;
    const double mu_j = interp(mu, y);
    tail += 0.5 * dt * (mu_j + mu_next);
    mu_next = mu_j;
    acc += (j == 0 ? 0.5 : 1.0) * std::exp(-tail) * interp(f, y);
  }
  return acc * dt;
}

Sinogram atten_xray(const ScalarField& mu, const ScalarField& f, const SinogramShape& shape,
                    double step) {
  require_same_grid(mu.grid(), f.grid(), "atten_xray");
  Sinogram out(shape);
  const DiskDomain& dom = f.grid().domain();
  const bool zero_f = sup_abs(f) == 0.0;
  if (zero_f) return out;
  detail::parallel_for(shape.n_ang, 4, [&](long kk) {
    const int k = static_cast<int>(kk);
    const Vec2 theta = direction(shape.angle(k));
    const Vec2 normal = perp(theta);
    for (int i = 0; i < shape.n_s; ++i) {
      const double s = shape.s(i);
      const Vec2 anchor = s * normal;
      if ((anchor - dom.center).norm() >= dom.radius) continue;
      out(i, k) = atten_line(mu, f, anchor, theta, step);
    }
  });
  return out;
}

struct HilbertTransform::Plans {
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
};

HilbertTransform::HilbertTransform(int n)
    : n_(n), padded_(4 * n), kernel_hat_(static_cast<std::size_t>(4 * n)), plans_(std::make_unique<Plans>()) {
  if (n < 8) throw ValidationError("hilbert: need at least 8 samples");
  auto* buf = reinterpret_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * padded_));
  // Plan creation is not thread-safe in FFTW; plans are built here once.
  plans_->forward = fftw_plan_dft_1d(padded_, buf, buf, FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
  plans_->backward = fftw_plan_dft_1d(padded_, buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
  fftw_free(buf);

  std::vector<cplx> kernel(static_cast<std::size_t>(padded_), 0.0);
  for (int m = 1; m < n_; m += 2) {
    const double v = 2.0 / (kPi * m);
    kernel[static_cast<std::size_t>(m)] = v;
    kernel[static_cast<std::size_t>(padded_ - m)] = -v;
  }
  fftw_execute_dft(plans_->forward, reinterpret_cast<fftw_complex*>(kernel.data()),
                   reinterpret_cast<fftw_complex*>(kernel_hat_.data()));
}

HilbertTransform::~HilbertTransform() {
  if (plans_) {
    fftw_destroy_plan(plans_->forward);
    fftw_destroy_plan(plans_->backward);
  }
}

void HilbertTransform::apply(std::span<const cplx> in, std::span<cplx> out) const {
  if (static_cast<int>(in.size()) != n_ || static_cast<int>(out.size()) != n_) {
    throw ValidationError("hilbert: input length does not match the transform size");
  }
  std::vector<cplx> buf(static_cast<std::size_t>(padded_), 0.0);
  std::copy(in.begin(), in.end(), buf.begin());
  auto* raw = reinterpret_cast<fftw_complex*>(buf.data());
  fftw_execute_dft(plans_->forward, raw, raw);
  for (int k = 0; k < padded_; ++k) buf[k] *= kernel_hat_[k];
  fftw_execute_dft(plans_->backward, raw, raw);
  const double scale = 1.0 / padded_;
  for (int k = 0; k < n_; ++k) out[k] = buf[k] * scale;
}

std::vector<double> HilbertTransform::apply(std::span<const double> in) const {
  std::vector<cplx> tmp(in.begin(), in.end());
  apply(tmp, tmp);
  std::vector<double> out(tmp.size());
  for (std::size_t k = 0; k < tmp.size(); ++k) out[k] = tmp[k].real();
  return out;
}

std::vector<double> hilbert(std::span<const double> samples) {
  return HilbertTransform(static_cast<int>(samples.size())).apply(samples);
}

ScalarField novikov_invert(const Sinogram& sino, const ScalarField& mu, const GridPtr& grid,
                           double step) {
  require_same_grid(*grid, mu.grid(), "novikov_invert");
  const SinogramShape& shape = sino.shape();
  const DiskDomain& dom = grid->domain();
  if (shape.s_max <= dom.radius + (dom.center.norm())) {
    throw ValidationError("novikov_invert: sinogram s_max must exceed the domain extent");
  }
  if (!(step > 0.0)) throw ValidationError("novikov_invert: step must be positive");
  const int ns = shape.n_s;
  const int na = shape.n_ang;
  const double ds = shape.ds();

  // Unattenuated transform of mu; attenuation is zero for it.
  const ScalarField zero(grid);
  const Sinogram radon_mu = atten_xray(zero, mu, shape, step);

  // Filtered rows w_k(s_N) in the normal-offset coordinate s_N = x . nu with
  // nu = -theta_perp. On the symmetric cell-centred lattice s_N[j] = -s[n-1-j].
  const HilbertTransform hilbert_op(ns);
  std::vector<cplx> filtered(static_cast<std::size_t>(ns) * na);
#pragma omp parallel for schedule(static)
  for (int k = 0; k < na; ++k) {
    std::vector<cplx> hrow(ns), a(ns);
    for (int j = 0; j < ns; ++j) hrow[j] = radon_mu(ns - 1 - j, k);
    std::vector<cplx> hr(ns);
    hilbert_op.apply(hrow, hr);
    for (int j = 0; j < ns; ++j) {
      hrow[j] = 0.5 * (hrow[j] + cplx(0.0, 1.0) * hr[j]);
      a[j] = std::exp(hrow[j]) * sino(ns - 1 - j, k);
    }
    hilbert_op.apply(a, a);
    for (int j = 0; j < ns; ++j) {
      filtered[static_cast<std::size_t>(k) * ns + j] = std::exp(-hrow[j]) * a[j];
    }
  }

  // Nodes where the vector field is needed: active nodes and the arms of the
  // divergence stencil. Active nodes sit at least three nodes from the edge.
  const Grid2& g = *grid;
  std::vector<char> need(g.size(), 0);
  for (std::size_t idx : g.active_nodes()) {
    const int i = static_cast<int>(idx % g.nx());
    const int j = static_cast<int>(idx / g.nx());
    for (int d = -2; d <= 2; ++d) {
      need[g.index(i + d, j)] = 1;
      need[g.index(i, j + d)] = 1;
    }
  }
  std::vector<std::size_t> nodes;
  for (std::size_t idx = 0; idx < g.size(); ++idx) {
    if (need[idx]) nodes.push_back(idx);
  }

  // Divergent-beam weights are read from a per-angle table of tail integrals
  // D(s, t) = int_t^inf mu(s theta_perp + tau theta) d tau on the (s_i, t_j)
  // lattice, t_j = -s_max + j * dt, accumulated from the far end by the
  // trapezoid rule and interpolated bilinearly at (x . theta_perp, x . theta).
  const int nt = static_cast<int>(std::ceil(2.0 * shape.s_max / step)) + 1;
  const double dt = 2.0 * shape.s_max / (nt - 1);
  auto mu_at = [&](const Vec2& y) {
    return (y - dom.center).norm() < dom.radius && g.in_bounds(y) ? interp(mu, y) : 0.0;
  };
  std::vector<cplx> vx(g.size(), 0.0), vy(g.size(), 0.0);
  std::vector<double> tail(static_cast<std::size_t>(ns) * nt);
  const long count = static_cast<long>(nodes.size());
  for (int k = 0; k < na; ++k) {
    const Vec2 theta = direction(shape.angle(k));
    const Vec2 tperp = perp(theta);
    const Vec2 nu = -tperp;
#pragma omp parallel for schedule(static)
    for (int i = 0; i < ns; ++i) {
      double* col = &tail[static_cast<std::size_t>(i) * nt];
      const Vec2 base = shape.s(i) * tperp;
      double prev = mu_at(base + shape.s_max * theta);
      col[nt - 1] = 0.0;
      for (int j = nt - 2; j >= 0; --j) {
        const double cur = mu_at(base + (-shape.s_max + j * dt) * theta);
        col[j] = col[j + 1] + 0.5 * dt * (prev + cur);
        prev = cur;
      }
    }
    const cplx* row = &filtered[static_cast<std::size_t>(k) * ns];
#pragma omp parallel for schedule(static)
    for (long p = 0; p < count; ++p) {
      const std::size_t idx = nodes[p];
      const Vec2 x = g.node(idx);
      const double sp = x.dot(tperp);
      const double u = (sp + shape.s_max) / ds - 0.5;
      const int i0 = static_cast<int>(std::floor(u));
      if (i0 < 0 || i0 + 1 >= ns) continue;
      const double a = u - i0;
      const double v = (x.dot(theta) + shape.s_max) / dt;
      const int j0 = std::min(std::max(static_cast<int>(std::floor(v)), 0), nt - 2);
      const double b = v - j0;
      const double* c0 = &tail[static_cast<std::size_t>(i0) * nt + j0];
      const double* c1 = c0 + nt;
      const double beam = (1 - a) * ((1 - b) * c0[0] + b * c0[1]) + a * ((1 - b) * c1[0] + b * c1[1]);
      // filtered row in s_N = -s: lattice index n-1-i
      const double sn = x.dot(nu);
      const double un = (sn + shape.s_max) / ds - 0.5;
      const int n0 = static_cast<int>(std::floor(un));
      if (n0 < 1 || n0 + 2 >= ns) continue;
      const double tn = un - n0;
      // cubic Lagrange through n0-1..n0+2; the divergence differentiates w,
      // and a linear interpolant would leave an O(ds) slope error
      const cplx w = -tn * (tn - 1) * (tn - 2) / 6.0 * row[n0 - 1] + (tn + 1) * (tn - 1) * (tn - 2) / 2.0 * row[n0] -
                     (tn + 1) * tn * (tn - 2) / 2.0 * row[n0 + 1] + (tn + 1) * tn * (tn - 1) / 6.0 * row[n0 + 2];
      const cplx c = std::exp(beam) * w;
      vx[idx] += nu.x() * c;
      vy[idx] += nu.y() * c;
    }
  }
  for (std::size_t idx : nodes) {
    vx[idx] /= static_cast<double>(na);
    vy[idx] /= static_cast<double>(na);
  }

  // (1 / 4 pi) * 2 pi * Re div(mean) by fourth-order central differences
  ScalarField out(grid);
  const double inv12h = 1.0 / (12.0 * g.h());
  const std::size_t nx = static_cast<std::size_t>(g.nx());
  auto central = [&](const std::vector<cplx>& v, std::size_t idx, std::size_t stride) {
    return (8.0 * (v[idx + stride] - v[idx - stride]) - (v[idx + 2 * stride] - v[idx - 2 * stride])).real() *
           inv12h;
  };
  for (std::size_t idx : g.active_nodes()) {
    out[idx] = 0.5 * (central(vx, idx, 1) + central(vy, idx, nx));
  }
  return out;
}

}  // namespace rte
