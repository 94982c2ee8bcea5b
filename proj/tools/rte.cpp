#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "rte/config.hpp"
#include "rte/coupled.hpp"
#include "rte/field_io.hpp"
#include "rte/inverse.hpp"
#include "rte/report.hpp"

namespace fs = std::filesystem;
using namespace rte;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

RunConfig config_from(const std::string& path) { return path.empty() ? RunConfig{} : load_config(path); }

PhantomSpec phantom_spec(const std::string& path, const PhantomSpec& fallback) {
  return path.empty() ? fallback : load_phantom(path);
}

// A coefficient from a field file when given, otherwise the phantom named by
// the config (or the built-in default) evaluated on the config grid.
ScalarField coefficient(const std::string& file, const std::string& phantom, const PhantomSpec& fallback,
                        const RunConfig& cfg, const GridPtr& grid) {
  if (!file.empty()) return read_field(file, grid);
  return eval_phantom(phantom_spec(phantom, fallback), grid, cfg.gamma).field;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir + "': " + ec.message());
}

std::string in_dir(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

enum class FileKind { field, angular, sinogram, trace };

FileKind sniff(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::string head(16, '\0');
  in.read(head.data(), static_cast<std::streamsize>(head.size()));
  head.resize(static_cast<std::size_t>(in.gcount()));
  if (head.starts_with("RTEF") || head.starts_with("# field")) return FileKind::field;
  if (head.starts_with("RTEA")) return FileKind::angular;
  if (head.starts_with("RTES") || head.starts_with("# sino")) return FileKind::sinogram;
  if (head.starts_with("# trace")) return FileKind::trace;
  throw IoError("'" + path + "': unrecognised file type");
}

void print(const Json& doc) { std::cout << doc.dump(2) << '\n'; }

// ---------------------------------------------------------------- plot

struct Image {
  int width = 0;
  int height = 0;
  std::vector<double> values;  // row 0 at the top
};

Image field_image(const ScalarField& f) {
  const Grid2& g = f.grid();
  Image img{g.nx(), g.ny(), {}};
  for (int j = g.ny() - 1; j >= 0; --j) {
    for (int i = 0; i < g.nx(); ++i) img.values.push_back(f.at(i, j));
  }
  return img;
}

Image sinogram_image(const Sinogram& s) {
  Image img{s.shape().n_s, s.shape().n_ang, {}};
  for (int k = 0; k < s.shape().n_ang; ++k) {
    for (int i = 0; i < s.shape().n_s; ++i) img.values.push_back(s(i, k));
  }
  return img;
}

void write_pgm(const Image& img, const std::string& path) {
  const auto [lo, hi] = std::minmax_element(img.values.begin(), img.values.end());
  const double vmin = *lo, vmax = *hi;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << "P5\n" << img.width << ' ' << img.height << "\n255\n";
  for (double v : img.values) {
    const int gray = vmax > vmin ? static_cast<int>(std::lround(255.0 * (v - vmin) / (vmax - vmin))) : 128;
    out.put(static_cast<char>(gray));
  }
  if (!out) throw IoError("write to '" + path + "' failed");

  std::ofstream side(path + ".minmax.txt");
  if (!side) throw IoError("cannot open '" + path + ".minmax.txt' for writing");
  side << std::setprecision(17) << "min = " << vmin << "\nmax = " << vmax << '\n';
  if (vmax == vmin) side << "# constant image, drawn as uniform gray 128\n";
}

void write_csv(const std::string& in_path, FileKind kind, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << std::setprecision(17);
  if (kind == FileKind::field) {
    const ScalarField f = read_field(in_path);
    out << "x,y,value\n";
    for (std::size_t idx = 0; idx < f.size(); ++idx) {
      const Vec2 x = f.grid().node(idx);
      out << x.x() << ',' << x.y() << ',' << f[idx] << '\n';
    }
  } else {
    const Sinogram s = read_sinogram(in_path);
    out << "s,angle,value\n";
    for (int k = 0; k < s.shape().n_ang; ++k) {
      for (int i = 0; i < s.shape().n_s; ++i) {
        out << s.shape().s(i) << ',' << s.shape().angle(k) << ',' << s(i, k) << '\n';
      }
    }
  }
  if (!out) throw IoError("write to '" + path + "' failed");
}

void cmd_plot(const std::string& in, const std::string& out) {
  const FileKind kind = sniff(in);
  if (kind != FileKind::field && kind != FileKind::sinogram) {
    throw ValidationError("plot: '" + in + "' is neither a field nor a sinogram");
  }
  const std::string ext = fs::path(out).extension().string();
  if (ext == ".csv") {
    write_csv(in, kind, out);
  } else if (ext == ".pgm") {
    write_pgm(kind == FileKind::field ? field_image(read_field(in)) : sinogram_image(read_sinogram(in)), out);
  } else {
    throw ValidationError("plot: output must end in .csv or .pgm");
  }
}

// ---------------------------------------------------------------- validate

struct Check {
  std::string name;
  std::function<std::pair<bool, double>()> run;
};

std::vector<Check> suite_geometry() {
  const DiskDomain disk;
  return {
      {"exit time from the centre is the radius",
       [disk] {
         const double tau = exit_backward(disk, {Vec2(0, 0), direction(0.7)}).tau;
         return std::pair{std::abs(tau - 1.0) <= 1e-14, tau};
       }},
      {"chord through an interior point has length 2 sqrt(1 - s^2)",
       [disk] {
         const auto span = chord(disk, Vec2(0, 0.6), Vec2(1, 0));
         const double len = span ? span->second - span->first : -1.0;
         return std::pair{std::abs(len - 1.6) <= 1e-14, len};
       }},
      {"sampled Gamma_- points lie on Gamma_-",
       [disk] {
         int bad = 0;
         for (const PhasePoint& p : sample_gamma(disk, 32, 32, GammaSide::minus)) {
           bad += !in_gamma(disk, p, GammaSide::minus);
         }
         return std::pair{bad == 0, static_cast<double>(bad)};
       }},
  };
}

std::vector<Check> suite_transport() {
  return {
      {"mu = 0, S = 0 reproduces the inflow exactly",
       [] {
         const GridPtr g = Grid2::covering(DiskDomain{}, 33);
         const AngularField u = transport_solve(ScalarField(g), ScalarField(g),
                                                BoundaryTrace::constant(GammaSide::minus, 0.7), 16, 0.05);
         double err = 0.0;
         for (std::size_t idx : g->active_nodes()) {
           for (int k = 0; k < 16; ++k) err = std::max(err, std::abs(u(idx, k) - 0.7));
         }
         return std::pair{err == 0.0, err};
       }},
      {"constant mu matches exp(-mu tau) within 3h",
       [] {
         const GridPtr g = Grid2::covering(DiskDomain{}, 33);
         const double m = 0.5;
         const ScalarField mu = ScalarField::from_function(g, [m](const Vec2&) { return m; });
         const AngularField u =
             transport_solve(mu, ScalarField(g), BoundaryTrace::constant(GammaSide::minus, 1.0), 16, default_step(*g));
         double err = 0.0;
         for (std::size_t idx : g->active_nodes()) {
           for (int k = 0; k < 16; ++k) {
             const double tau = exit_backward(DiskDomain{}, {g->node(idx), u.theta(k)}).tau;
             err = std::max(err, std::abs(u(idx, k) - std::exp(-m * tau)));
           }
         }
         return std::pair{err <= m * 3 * g->h(), err};
       }},
  };
}

std::vector<Check> suite_elliptic() {
  return {
      {"constants are reproduced",
       [] {
         const GridPtr g = Grid2::covering(DiskDomain{}, 41);
         const ScalarField phi = poisson_solve(ScalarField(g), constant_boundary(1.0));
         double err = 0.0;
         for (std::size_t idx : g->active_nodes()) err = std::max(err, std::abs(phi[idx] - 1.0));
         return std::pair{err <= 1e-12, err};
       }},
      {"g = 4 gives |x|^2 - 1",
       [] {
         const GridPtr g = Grid2::covering(DiskDomain{}, 65);
         const ScalarField four = ScalarField::from_function(g, [](const Vec2&) { return 4.0; });
         const ScalarField phi = poisson_solve(four, constant_boundary(0.0));
         double err = 0.0;
         for (std::size_t idx : g->active_nodes()) {
           err = std::max(err, std::abs(phi[idx] - (g->node(idx).squaredNorm() - 1.0)));
         }
         return std::pair{err <= 1e-6 * g->h() * g->h(), err};
       }},
      {"maximum principle",
       [] {
         const GridPtr g = Grid2::covering(DiskDomain{}, 41);
         const ScalarField rhs = ScalarField::from_function(g, [](const Vec2& x) { return 1.0 + x.x() * x.x(); });
         const ScalarField phi = poisson_solve(rhs, constant_boundary(-0.1));
         double top = -INFINITY;
         for (std::size_t idx : g->active_nodes()) top = std::max(top, phi[idx]);
         return std::pair{top <= 0.0, top};
       }},
  };
}

ForwardSolution default_forward(int n, int n_dir) {
  const GridPtr g = Grid2::covering(DiskDomain{}, n);
  ForwardSettings s;
  s.n_dir = n_dir;
  return forward_solve(eval_phantom(PhantomSpec::default_sigma(), g).field,
                       eval_phantom(PhantomSpec::default_mu(), g).field, AdmissibleData{}, s);
}

std::vector<Check> suite_contraction() {
  return {
      {"Picard ratios below 1 with C_F < 0.9 on strong admissible data",
       [] {
         const GridPtr g = Grid2::covering(DiskDomain{}, 41);
         AdmissibleData d;
         d.u_B = BoundaryTrace::constant(GammaSide::minus, 1.0);
         d.T_B = constant_boundary(0.3);
         d.alpha1 = 1.0;
         d.alpha2 = 0.3;
         d.delta1 = 2.0;
         ForwardSettings s;
         s.n_dir = 16;
         const ForwardSolution sol = forward_solve(ScalarField::from_function(g, [](const Vec2&) { return 0.3; }),
                                                   ScalarField::from_function(g, [](const Vec2&) { return 0.5; }), d, s);
         const double cf = sol.diag.contraction_constant();
         return std::pair{cf < 0.9 && sol.diag.iterations <= 50, cf};
       }},
  };
}

std::vector<Check> suite_positivity() {
  return {
      {"default phantoms: u and T above their bounds",
       [] {
         const ForwardSolution sol = default_forward(41, 16);
         const PositivityReport& p = sol.diag.positivity;
         return std::pair{p.pass(), std::min(p.u_margin(), p.T_margin())};
       }},
  };
}

std::vector<Check> suite_xray() {
  return {
      {"round trip on Gaussian f and mu within 2%",
       [] {
         const GridPtr g = Grid2::covering(DiskDomain{}, 64);
         const ScalarField f = ScalarField::from_function(
             g, [](const Vec2& x) { return std::exp(-(x - Vec2(0.1, -0.15)).squaredNorm() / (2 * 0.04)); });
         const ScalarField mu = ScalarField::from_function(
             g, [](const Vec2& x) { return 0.5 * std::exp(-(x - Vec2(-0.2, 0.1)).squaredNorm() / (2 * 0.0625)); });
         const double step = default_step(*g);
         const ScalarField r = novikov_invert(atten_xray(mu, f, {128, 128, 1.2}, step), mu, g, step);
         const double err = relative_l2_error(r, f, g->active_nodes());
         return std::pair{err <= 0.02, err};
       }},
  };
}

int cmd_validate(const std::string& suite) {
  const std::vector<std::pair<std::string, std::function<std::vector<Check>()>>> suites = {
      {"geometry", suite_geometry}, {"transport", suite_transport},   {"elliptic", suite_elliptic},
      {"contraction", suite_contraction}, {"positivity", suite_positivity}, {"xray", suite_xray},
  };
  bool known = suite == "all";
  int failed = 0;
  Json summary = Json::array();
  for (const auto& [name, make] : suites) {
    if (suite != "all" && suite != name) continue;
    known = true;
    for (const Check& c : make()) {
      const auto [ok, value] = c.run();
      failed += !ok;
      std::cout << (ok ? "PASS " : "FAIL ") << name << ": " << c.name << " (" << value << ")\n";
      summary.push_back({{"suite", name}, {"check", c.name}, {"pass", ok}, {"value", value}});
    }
  }
  if (!known) throw ValidationError("validate: unknown suite '" + suite + "'");
  if (failed > 0) {
    throw ValidationError("validate: " + std::to_string(failed) + " check(s) failed in suite '" + suite + "'");
  }
  return 0;
}

// ---------------------------------------------------------------- solve commands

struct Media {
  RunConfig cfg;
  GridPtr grid;
  ScalarField sigma;
  ScalarField mu;
};

Media load_media(const std::string& config, const std::string& sigma_file, const std::string& mu_file) {
  RunConfig cfg = config_from(config);
  GridPtr grid = cfg.make_grid();
  ScalarField mu = coefficient(mu_file, cfg.mu_phantom, PhantomSpec::default_mu(), cfg, grid);
  ScalarField sigma = coefficient(sigma_file, cfg.sigma_phantom, PhantomSpec::default_sigma(), cfg, grid);
  return {std::move(cfg), std::move(grid), std::move(sigma), std::move(mu)};
}

double solve_step(const RunConfig& cfg, const Grid2& grid) { return cfg.step > 0.0 ? cfg.step : default_step(grid); }

// Sinogram of a forward solution with the configured noise applied.
Sinogram simulated_sinogram(const Media& m, const ForwardSolution& fwd, double noise, std::uint64_t seed) {
  const double step = solve_step(m.cfg, *m.grid);
  const AdmissibleData data = m.cfg.data();
  Sinogram sino = boundary_to_sinogram(simulated_measurement(m.mu, fwd.source, data.u_B, step), data.u_B, m.mu,
                                       m.cfg.sinogram(), step);
  add_noise(sino.values(), noise * sino.sup_abs(), seed);
  return sino;
}

BoundaryTrace simulated_trace(const Media& m, const ForwardSolution& fwd, double noise_std, std::uint64_t seed) {
  const double step = solve_step(m.cfg, *m.grid);
  const BoundaryTrace t =
      tabulate_measurement(simulated_measurement(m.mu, fwd.source, m.cfg.data().u_B, step), m.grid->domain(),
                           m.cfg.trace_n_beta, m.cfg.trace_n_dir);
  if (noise_std == 0.0) return t;
  std::vector<TraceSample> samples = t.samples();
  std::vector<double> values;
  for (const TraceSample& s : samples) values.push_back(s.value);
  add_noise(values, noise_std, seed);
  for (std::size_t k = 0; k < samples.size(); ++k) samples[k].value = values[k];
  return BoundaryTrace::from_samples(GammaSide::plus, std::move(samples));
}

std::string field_name(const std::string& stem, bool binary) { return stem + (binary ? ".bin" : ".txt"); }

int cmd_phantom(const std::string& spec_path, const std::string& which, const std::string& config, int grid_n,
                const std::string& out) {
  RunConfig cfg = config_from(config);
  if (grid_n > 0) cfg.grid = grid_n;
  cfg.validate();
  PhantomSpec spec;
  if (!spec_path.empty()) {
    spec = load_phantom(spec_path);
  } else if (which == "sigma") {
    spec = PhantomSpec::default_sigma();
  } else if (which == "mu") {
    spec = PhantomSpec::default_mu();
  } else {
    throw ValidationError("phantom: give --spec <file> or --default sigma|mu");
  }
  const Phantom p = eval_phantom(spec, cfg.make_grid(), cfg.gamma);
  write_field(p.field, out, format_for(out));
  print({{"command", "phantom"}, {"out", out}, {"grid", cfg.grid}, {"spec", to_json(spec)}, {"report", to_json(p.report)}});
  return 0;
}

int cmd_forward(const std::string& config, const std::string& sigma, const std::string& mu,
                const std::string& out_dir, bool binary) {
  const auto t0 = Clock::now();
  const Media m = load_media(config, sigma, mu);
  const ForwardSolution sol = forward_solve(m.sigma, m.mu, m.cfg.data(), m.cfg.forward());
  ensure_dir(out_dir);
  const std::string u_path = in_dir(out_dir, "u.bin");
  const std::string T_path = in_dir(out_dir, field_name("T", binary));
  const std::string mean_path = in_dir(out_dir, field_name("mean_u", binary));
  const std::string S_path = in_dir(out_dir, field_name("emission", binary));
  write_angular(sol.u, u_path);
  write_field(sol.T, T_path, format_for(T_path));
  write_field(angular_average(sol.u), mean_path, format_for(mean_path));
  write_field(sol.source, S_path, format_for(S_path));
  const Json manifest = {{"command", "forward"},
                         {"config", to_json(m.cfg)},
                         {"inputs", {{"sigma", sigma}, {"mu", mu}}},
                         {"files", {{"u", u_path}, {"T", T_path}, {"mean_u", mean_path}, {"emission", S_path}}},
                         {"diagnostics", to_json(sol.diag)}};
  write_json(manifest, in_dir(out_dir, "manifest.json"));
  print({{"command", "forward"},
         {"iterations", sol.diag.iterations},
         {"contraction_constant", sol.diag.contraction_constant()},
         {"positivity", sol.diag.positivity.pass()},
         {"manifest", in_dir(out_dir, "manifest.json")},
         {"seconds", seconds_since(t0)}});
  return 0;
}

int cmd_measure(const std::string& config, const std::string& sigma, const std::string& mu,
                std::optional<double> noise, std::optional<std::uint64_t> seed, const std::string& out,
                const std::string& trace_out) {
  if (out.empty() && trace_out.empty()) throw ValidationError("measure: give --out and/or --trace");
  Media m = load_media(config, sigma, mu);
  if (noise) m.cfg.noise = *noise;
  if (seed) m.cfg.seed = *seed;
  m.cfg.validate();
  const ForwardSolution sol = forward_solve(m.sigma, m.mu, m.cfg.data(), m.cfg.forward());
  // Noise is scaled by the emission part of the signal, the sinogram.
  const Sinogram clean = simulated_sinogram(m, sol, 0.0, m.cfg.seed);
  const double noise_std = m.cfg.noise * clean.sup_abs();
  Json files = Json::object();
  if (!out.empty()) {
    Sinogram sino = clean;
    add_noise(sino.values(), noise_std, m.cfg.seed);
    write_sinogram(sino, out, format_for(out));
    files["sinogram"] = out;
  }
  if (!trace_out.empty()) {
    write_trace(simulated_trace(m, sol, noise_std, m.cfg.seed), trace_out);
    files["trace"] = trace_out;
  }
  print({{"command", "measure"},
         {"noise", m.cfg.noise},
         {"noise_std", noise_std},
         {"seed", m.cfg.seed},
         {"files", files},
         {"forward", to_json(sol.diag)}});
  return 0;
}

int cmd_invert(const std::string& config, const std::string& measurement, const std::string& mu_file,
               const std::string& out, const std::string& report) {
  const RunConfig cfg = config_from(config);
  const GridPtr grid = cfg.make_grid();
  const ScalarField mu = coefficient(mu_file, cfg.mu_phantom, PhantomSpec::default_mu(), cfg, grid);
  Measurement meas;
  switch (sniff(measurement)) {
    case FileKind::sinogram:
      meas = read_sinogram(measurement);
      break;
    case FileKind::trace:
      meas = read_trace(measurement);
      break;
    default:
      throw ValidationError("invert: '" + measurement + "' is neither a sinogram nor a trace");
  }
  const AdmissibleData data = cfg.data();
  const PipelineResult r = run_pipeline(meas, data.u_B, data.T_B, mu, cfg.inverse());
  write_field(r.sigma, out, format_for(out));
  const Json doc = {{"command", "invert"},
                    {"config", to_json(cfg)},
                    {"measurement", measurement},
                    {"out", out},
                    {"pipeline", to_json(r, false)}};
  if (!report.empty()) write_json(doc, report);
  print(doc);
  return 0;
}

int cmd_pipeline(const std::string& config, const std::string& sigma, const std::string& mu,
                 const std::string& out_dir, const std::string& mode, bool binary) {
  const auto t0 = Clock::now();
  const Media m = load_media(config, sigma, mu);
  const ForwardSolution sol = forward_solve(m.sigma, m.mu, m.cfg.data(), m.cfg.forward());
  const double t_forward = seconds_since(t0);

  const Sinogram clean = simulated_sinogram(m, sol, 0.0, m.cfg.seed);
  const double noise_std = m.cfg.noise * clean.sup_abs();
  Measurement meas;
  if (mode == "sinogram") {
    Sinogram sino = clean;
    add_noise(sino.values(), noise_std, m.cfg.seed);
    meas = std::move(sino);
  } else if (mode == "trace") {
    meas = simulated_trace(m, sol, noise_std, m.cfg.seed);
  } else {
    throw ValidationError("pipeline: --measurement-mode must be 'sinogram' or 'trace'");
  }
  const AdmissibleData data = m.cfg.data();
  const Truth truth{m.sigma, sol.source, sol.u, sol.T};
  const PipelineResult r = run_pipeline(meas, data.u_B, data.T_B, m.mu, m.cfg.inverse(), truth);

  ensure_dir(out_dir);
  const std::string sigma_path = in_dir(out_dir, field_name("sigma_hat", binary));
  const std::string S_path = in_dir(out_dir, field_name("emission_hat", binary));
  const std::string T_path = in_dir(out_dir, field_name("T_hat", binary));
  const std::string sino_path = in_dir(out_dir, binary ? "sinogram.bin" : "sinogram.txt");
  write_field(r.sigma, sigma_path, format_for(sigma_path));
  write_field(r.S, S_path, format_for(S_path));
  write_field(r.T, T_path, format_for(T_path));
  write_sinogram(r.sino, sino_path, format_for(sino_path));
  const double err = r.truth_metrics.at("sigma_rel_sup_error");
  const Json report = {{"command", "pipeline"},
                       {"config", to_json(m.cfg)},
                       {"measurement_mode", mode},
                       {"noise_std", noise_std},
                       {"forward", to_json(sol.diag)},
                       {"pipeline", to_json(r, false)},
                       {"sigma_rel_sup_error", err},
                       {"files", {{"sigma_hat", sigma_path}, {"emission_hat", S_path}, {"T_hat", T_path}, {"sinogram", sino_path}}}};
  write_json(report, in_dir(out_dir, "report.json"));

  Json timings = {{"forward", t_forward}};
  for (const StageReport& s : r.stages) timings[s.name] = s.seconds;
  timings["total"] = seconds_since(t0);
  print({{"command", "pipeline"},
         {"sigma_rel_sup_error", err},
         {"sigma_rel_l2_error", r.truth_metrics.at("sigma_rel_l2_error")},
         {"report", in_dir(out_dir, "report.json")},
         {"seconds", timings}});
  return 0;
}

int cmd_stability(const std::string& config, const std::string& sigma1, const std::string& sigma2,
                  const std::string& mu, const std::vector<double>& ladder, const std::string& out) {
  const Media m = load_media(config, sigma1, mu);
  const ScalarField s2 = read_field(sigma2, m.grid);
  const StabilityReport rep = stability_experiment(m.sigma, s2, m.mu, m.cfg.data(), m.cfg.forward(), m.cfg.inverse(), ladder);
  const Json doc = {{"command", "stability"}, {"config", to_json(m.cfg)}, {"stability", to_json(rep)}};
  if (!out.empty()) write_json(doc, out);
  print(doc);
  return 0;
}

void fail_json(const std::string& kind, int code, const std::string& message) {
  std::cerr << Json{{"error", kind}, {"exit_code", code}, {"message", message}}.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Coupled radiative transfer: forward solves and emission reconstruction"};
  app.require_subcommand(1);
  app.fallthrough();
  int threads = 0;
  app.add_option("--threads", threads, "Cap on worker threads")->check(CLI::PositiveNumber);

  std::string config, sigma, mu, out, out_dir, spec, which, measurement, report, trace_out, suite, in, mode = "sinogram";
  std::string sigma2;
  int grid_n = 0;
  bool binary = false;
  std::optional<double> noise;
  std::optional<std::uint64_t> seed;
  std::vector<double> ladder{1.0, 0.5, 0.25, 0.125};

  CLI::App* phantom = app.add_subcommand("phantom", "Evaluate a phantom on the grid");
  phantom->add_option("--spec", spec, "Phantom file");
  phantom->add_option("--default", which, "Built-in phantom: sigma or mu");
  phantom->add_option("--config", config, "Run configuration");
  phantom->add_option("--grid", grid_n, "Nodes per side (overrides the config)");
  phantom->add_option("--out", out, "Output field file")->required();

  CLI::App* forward = app.add_subcommand("forward", "Solve the coupled forward problem");
  forward->add_option("--sigma", sigma, "Scattering field file (default: config phantom)");
  forward->add_option("--mu", mu, "Absorption field file (default: config phantom)");
  forward->add_option("--config", config, "Run configuration");
  forward->add_option("--out-dir", out_dir, "Output directory")->required();
  forward->add_flag("--binary", binary, "Write fields in binary");

  CLI::App* measure = app.add_subcommand("measure", "Simulate the boundary measurement");
  measure->add_option("--sigma", sigma, "Scattering field file (default: config phantom)");
  measure->add_option("--mu", mu, "Absorption field file (default: config phantom)");
  measure->add_option("--config", config, "Run configuration");
  measure->add_option("--noise", noise, "Noise level relative to the emission signal");
  measure->add_option("--seed", seed, "Noise seed");
  measure->add_option("--out", out, "Sinogram output file");
  measure->add_option("--trace", trace_out, "Gamma_+ trace output file");

  CLI::App* invert = app.add_subcommand("invert", "Reconstruct sigma from a measurement");
  invert->add_option("--measurement", measurement, "Sinogram or trace file")->required();
  invert->add_option("--mu", mu, "Absorption field file (default: config phantom)");
  invert->add_option("--config", config, "Run configuration");
  invert->add_option("--out", out, "Output sigma field file")->required();
  invert->add_option("--report", report, "Report JSON file");

  CLI::App* pipeline = app.add_subcommand("pipeline", "Forward solve, measure and reconstruct against the truth");
  pipeline->add_option("--sigma-truth", sigma, "True scattering field file (default: config phantom)");
  pipeline->add_option("--mu", mu, "Absorption field file (default: config phantom)");
  pipeline->add_option("--config", config, "Run configuration");
  pipeline->add_option("--out-dir", out_dir, "Output directory")->required();
  pipeline->add_option("--measurement-mode", mode, "sinogram or trace");
  pipeline->add_flag("--binary", binary, "Write fields in binary");

  CLI::App* stability = app.add_subcommand("stability", "Stability ratio over a perturbation ladder");
  stability->add_option("--sigma1", sigma, "First scattering field file (default: config phantom)");
  stability->add_option("--sigma2", sigma2, "Second scattering field file")->required();
  stability->add_option("--mu", mu, "Absorption field file (default: config phantom)");
  stability->add_option("--config", config, "Run configuration");
  stability->add_option("--ladder", ladder, "Perturbation scales");
  stability->add_option("--out", out, "Report JSON file");

  CLI::App* validate = app.add_subcommand("validate", "Run invariant check suites");
  validate->add_option("--suite", suite, "geometry, transport, elliptic, contraction, positivity, xray or all")
      ->required();

  CLI::App* plot = app.add_subcommand("plot", "Write a field or sinogram as CSV or PGM");
  plot->add_option("--in", in, "Field or sinogram file")->required();
  plot->add_option("--out", out, "Output .csv or .pgm")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    fail_json("usage", 1, e.what());
    return 1;
  }

#ifdef _OPENMP
  if (threads > 0) omp_set_num_threads(threads);
#endif

  try {
    if (*phantom) return cmd_phantom(spec, which, config, grid_n, out);
    if (*forward) return cmd_forward(config, sigma, mu, out_dir, binary);
    if (*measure) return cmd_measure(config, sigma, mu, noise, seed, out, trace_out);
    if (*invert) return cmd_invert(config, measurement, mu, out, report);
    if (*pipeline) return cmd_pipeline(config, sigma, mu, out_dir, mode, binary);
    if (*stability) return cmd_stability(config, sigma, sigma2, mu, ladder, out);
    if (*validate) return cmd_validate(suite);
    if (*plot) {
      cmd_plot(in, out);
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << to_json(e).dump() << '\n';
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    fail_json("internal", 1, e.what());
    return 1;
  }
  return 0;
}
