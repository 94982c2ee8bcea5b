#pragma once

#include <cstdint>
#include <string>

#include "rte/coupled.hpp"
#include "rte/fields.hpp"
#include "rte/inverse.hpp"

namespace rte {

/// Run configuration. Files are flat `key = value` lines; `#` starts a
/// comment, blank lines are ignored and every key may appear once.
///
///   grid                 nodes per side                    128
///   n_dir                transport directions               64
///   n_s, n_ang           sinogram size                     256, 256
///   s_max                sinogram half-width               1.2
///   step                 ray step, 0 = h/2                 0
///   fp_tol, max_iter     Picard stopping rule              1e-10, 200
///   lin_tol              Poisson relative residual         1e-10
///   gamma                Hoelder exponent                  0.5
///   mask_margin          reconstruction collar             0.05
///   support_radius       radius used for mu_m              0.8
///   u_B, T_B             constant boundary data            0.1, 0.05
///   alpha1, alpha2       lower bounds of the data          0.1, 0.05
///   delta1, delta2       norm caps of the data             1, 1
///   allow_inadmissible   solve outside the admissible set  false
///   floor                temperature floor, 0 = alpha2/2   0
///   noise, seed          measurement noise level and seed  0, 1
///   trace_n_beta         stored trace lattice              512
///   trace_n_dir                                            512
///   sigma_phantom        phantom file for sigma            (built-in default)
///   mu_phantom           phantom file for mu               (built-in default)
struct RunConfig {
  int grid = 128;
  int n_dir = 64;
  int n_s = 256;
  int n_ang = 256;
  double s_max = 1.2;
  double step = 0.0;
  double fp_tol = 1e-10;
  int max_iter = 200;
  double lin_tol = 1e-10;
  double gamma = 0.5;
  double mask_margin = 0.05;
  double support_radius = 0.8;
  double u_B = 0.1;
  double T_B = 0.05;
  double alpha1 = 0.1;
  double alpha2 = 0.05;
  double delta1 = 1.0;
  double delta2 = 1.0;
  bool allow_inadmissible = false;
  double floor = 0.0;
  double noise = 0.0;
  std::uint64_t seed = 1;
  int trace_n_beta = 512;
  int trace_n_dir = 512;
  std::string sigma_phantom;
  std::string mu_phantom;

  void validate() const;
  GridPtr make_grid() const;
  AdmissibleData data() const;
  ForwardSettings forward() const;
  InverseSettings inverse() const;
  SinogramShape sinogram() const { return {n_s, n_ang, s_max}; }
};

/// Throws ValidationError naming the line of an unknown key, a repeated key
/// or a malformed value.
RunConfig parse_config(const std::string& text, const std::string& origin = "config");
/// Relative phantom paths are resolved against the config file's directory.
RunConfig load_config(const std::string& path);
std::string to_text(const RunConfig& cfg);

/// Phantom files use the same syntax with keys `background`,
/// `support_radius` and any number of `bump = cx cy amplitude width` lines.
PhantomSpec parse_phantom(const std::string& text, const std::string& origin = "phantom");
PhantomSpec load_phantom(const std::string& path);
std::string to_text(const PhantomSpec& spec);

std::string read_text_file(const std::string& path);

}  // namespace rte
