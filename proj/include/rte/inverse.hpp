#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "rte/coupled.hpp"
#include "rte/xray.hpp"

namespace rte {

/// Outgoing radiance u(x, theta) at a Gamma_+ point.
using MeasurementFn = std::function<double(const PhasePoint&)>;

/// Simulated measurement of a forward solution: each call integrates the
/// characteristic through the converged emission field afresh. The fields
/// are copied, so the function outlives its arguments.
MeasurementFn simulated_measurement(const ScalarField& mu, const ScalarField& source,
                                    const BoundaryTrace& u_B, double step);

/// Measurement tabulated on the (beta, dir) lattice of sample_gamma(+).
BoundaryTrace tabulate_measurement(const MeasurementFn& measure, const DiskDomain& domain,
                                   int n_beta, int n_dir);

/// Attenuated sinogram of the emission: for every line meeting the disk,
/// measurement at the exit point minus the attenuated inflow carried along
/// the chord. Lines that miss the disk stay zero.
Sinogram boundary_to_sinogram(const MeasurementFn& measure, const BoundaryTrace& u_B,
                              const ScalarField& mu, const SinogramShape& shape, double step);

/// Stored-data variant. The inflow term is removed at the table points and
/// the remainder is interpolated to the exit points. Throws CoverageError
/// listing the first uncovered phase points when the table has gaps.
Sinogram boundary_to_sinogram(const BoundaryTrace& measured, const BoundaryTrace& u_B,
                              const ScalarField& mu, const SinogramShape& shape, double step);

/// Zero-mean Gaussian noise of the given standard deviation, from a
/// mt19937_64 stream seeded with `seed`.
void add_noise(std::span<double> values, double std_dev, std::uint64_t seed);

struct EmissionRecovery {
  ScalarField S;
  double raw_min = 0.0;
  double clamped_mass = 0.0;  // h^2 * sum of the clamped negative parts
};

EmissionRecovery recover_emission(const Sinogram& sino, const ScalarField& mu, double step);

AngularField recover_u(const ScalarField& S, const ScalarField& mu, const BoundaryTrace& u_B,
                       int n_dir, double step);

ScalarField recover_T(const ScalarField& S, const AngularField& u, const ScalarField& mu,
                      const BoundaryFunction& T_B, double lin_tol = 1e-10);

/// Nodes with |x - c| <= R - margin.
std::vector<std::size_t> reconstruction_mask(const Grid2& grid, double margin);

struct SigmaRecovery {
  ScalarField sigma;
  double min_T_on_mask = 0.0;
};

/// S / T^4 on the mask and zero elsewhere. Throws PositivityError when T
/// drops below `floor` on the mask.
SigmaRecovery recover_sigma(const ScalarField& S, const ScalarField& T, double floor,
                            double margin = 0.05);

struct InverseSettings {
  int n_dir = 64;
  double step = 0.0;  // 0 selects half the grid spacing
  SinogramShape sino;
  double lin_tol = 1e-10;
  double mask_margin = 0.05;
  double floor = 0.025;
};

struct Truth {
  std::optional<ScalarField> sigma;
  std::optional<ScalarField> S;
  std::optional<AngularField> u;
  std::optional<ScalarField> T;
};

struct StageReport {
  std::string name;
  double seconds = 0.0;
  std::map<std::string, double> metrics;
};

struct PipelineResult {
  ScalarField sigma;
  ScalarField S;
  AngularField u;
  ScalarField T;
  Sinogram sino;
  std::vector<StageReport> stages;
  std::map<std::string, double> truth_metrics;
};

using Measurement = std::variant<MeasurementFn, BoundaryTrace, Sinogram>;

/// boundary_to_sinogram -> recover_emission -> recover_u -> recover_T ->
/// recover_sigma. A measurement given as a Sinogram passes through the first
/// stage unchanged. Errors leave with the failing stage's name attached.
PipelineResult run_pipeline(const Measurement& measurement, const BoundaryTrace& u_B,
                            const BoundaryFunction& T_B, const ScalarField& mu,
                            const InverseSettings& settings, const Truth& truth = {});

/// sup |a - b| / sup |b| over the given nodes.
double relative_sup_error(const ScalarField& a, const ScalarField& b,
                          const std::vector<std::size_t>& nodes);
/// L2 norm of a - b over L2 norm of b, over the given nodes.
double relative_l2_error(const ScalarField& a, const ScalarField& b,
                         const std::vector<std::size_t>& nodes);

struct StabilityRow {
  double t = 0.0;
  double lhs = 0.0;  // sup |sigma1 - sigma2_t|
  double rhs = 0.0;  // discrete C^gamma norm of the inverted measurement difference
  double ratio() const { return rhs > 0.0 ? lhs / rhs : 0.0; }
};

struct StabilityReport {
  std::vector<StabilityRow> rows;
  /// Largest over smallest ratio across the ladder.
  double band() const;
};

/// For each t, sigma2_t = sigma1 + t (sigma2 - sigma1); both forward problems
/// are solved with the same data and mu, the difference of the two Gamma_+
/// measurements is turned into a sinogram and inverted without clamping.
StabilityReport stability_experiment(const ScalarField& sigma1, const ScalarField& sigma2,
                                     const ScalarField& mu, const AdmissibleData& data,
                                     const ForwardSettings& forward, const InverseSettings& inverse,
                                     const std::vector<double>& ladder = {1.0, 0.5, 0.25, 0.125});

}  // namespace rte
