#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "rte/config.hpp"
#include "rte/field_io.hpp"
#include "rte/report.hpp"

using namespace rte;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    std::random_device rd;
    path = fs::temp_directory_path() / ("rte_io_" + std::to_string(rd()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

ScalarField noisy_field(const GridPtr& g) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  ScalarField f(g);
  for (std::size_t idx : g->active_nodes()) f[idx] = u(rng) * std::exp(10 * u(rng));
  return f;
}

}  // namespace

TEST_CASE("field files round-trip bit-exactly") {
  TempDir tmp;
  const GridPtr g = Grid2::covering(DiskDomain{}, 23);
  const ScalarField f = noisy_field(g);
  for (const std::string name : {"f.txt", "f.bin"}) {
    const std::string path = tmp / name;
    write_field(f, path, format_for(path));
    const ScalarField back = read_field(path);
    CHECK(back.grid().same_layout(*g));
    for (std::size_t k = 0; k < f.size(); ++k) CHECK(back[k] == f[k]);
    CHECK_NOTHROW(read_field(path, g));
    CHECK_THROWS_AS(read_field(path, Grid2::covering(DiskDomain{}, 25)), ValidationError);
  }
  CHECK(format_for("a.bin") == FileFormat::binary);
  CHECK(format_for("a.txt") == FileFormat::text);
}

TEST_CASE("angular, sinogram and trace files round-trip") {
  TempDir tmp;
  const GridPtr g = Grid2::covering(DiskDomain{}, 17);
  AngularField u(g, 8);
  for (std::size_t k = 0; k < u.values().size(); ++k) u.values()[k] = std::sin(0.37 * k) / 3.0;
  write_angular(u, tmp / "u.bin");
  const AngularField ub = read_angular(tmp / "u.bin");
  CHECK(ub.n_dir() == 8);
  CHECK(std::equal(u.values().begin(), u.values().end(), ub.values().begin()));

  Sinogram s({12, 6, 1.3});
  for (std::size_t k = 0; k < s.values().size(); ++k) s.values()[k] = std::exp(-0.1 * k) / 7.0;
  for (const std::string name : {"s.txt", "s.bin"}) {
    write_sinogram(s, tmp / name, format_for(name));
    const Sinogram back = read_sinogram(tmp / name);
    CHECK(back.shape() == s.shape());
    CHECK(std::equal(s.values().begin(), s.values().end(), back.values().begin()));
  }

  const DiskDomain disk;
  std::vector<TraceSample> samples;
  for (const PhasePoint& p : sample_gamma(disk, 16, 16, GammaSide::plus)) {
    samples.push_back(BoundaryTrace::sample_at(disk, p, 1.0 / (3.0 + p.x.x())));
  }
  const BoundaryTrace t = BoundaryTrace::from_samples(GammaSide::plus, samples);
  write_trace(t, tmp / "t.txt");
  const BoundaryTrace tb = read_trace(tmp / "t.txt");
  CHECK(tb.side() == GammaSide::plus);
  REQUIRE(tb.samples().size() == t.samples().size());
  for (std::size_t k = 0; k < t.samples().size(); ++k) {
    CHECK(tb.samples()[k].beta == t.samples()[k].beta);
    CHECK(tb.samples()[k].dir_angle == t.samples()[k].dir_angle);
    CHECK(tb.samples()[k].value == t.samples()[k].value);
  }
  CHECK(tb.has_lattice());

  write_trace(BoundaryTrace::constant(GammaSide::minus, 0.1), tmp / "c.txt");
  const BoundaryTrace c = read_trace(tmp / "c.txt");
  CHECK(c.is_constant());
  CHECK(c.constant_value() == 0.1);
  CHECK(c.side() == GammaSide::minus);
}

TEST_CASE("malformed files raise IoError") {
  TempDir tmp;
  CHECK_THROWS_AS(read_field(tmp / "missing.txt"), IoError);
  write_file(tmp / "bad.txt", "# field 4 4 0.1 0 0\n1 2 3\n");
  CHECK_THROWS_AS(read_field(tmp / "bad.txt"), IoError);
  write_file(tmp / "tiny.txt", "# field 3 3 0.1 0 0\n1 2 3 4 5 6 7 8 9\n");
  CHECK_THROWS_AS(read_field(tmp / "tiny.txt"), IoError);
  write_file(tmp / "junk.txt", "hello\n");
  CHECK_THROWS_AS(read_field(tmp / "junk.txt"), IoError);
  CHECK_THROWS_AS(read_sinogram(tmp / "junk.txt"), IoError);
  CHECK_THROWS_AS(read_trace(tmp / "junk.txt"), IoError);
  write_file(tmp / "short.bin", "RTEF\x01");
  CHECK_THROWS_AS(read_field(tmp / "short.bin"), IoError);
  CHECK_THROWS_AS(read_angular(tmp / "short.bin"), IoError);
  try {
    read_field(tmp / "missing.txt");
  } catch (const Error& e) {
    CHECK(e.code() == ExitCode::io);
  }
}

TEST_CASE("config parsing") {
  const RunConfig defaults;
  const RunConfig same = parse_config(to_text(defaults));
  CHECK(to_text(same) == to_text(defaults));

  const RunConfig c = parse_config(
      "# comment\n\ngrid = 64   # trailing\nu_B = 0.2\nT_B=0.08\nalpha1 = 0.2\nalpha2 = 0.08\n"
      "allow_inadmissible = yes\nseed = 42\nnoise = 1e-3\n");
  CHECK(c.grid == 64);
  CHECK(c.u_B == 0.2);
  CHECK(c.T_B == 0.08);
  CHECK(c.allow_inadmissible);
  CHECK(c.seed == 42);
  CHECK(c.noise == 1e-3);
  CHECK(c.n_dir == defaults.n_dir);
  CHECK(c.inverse().floor == doctest::Approx(0.04));
  CHECK(c.make_grid()->nx() == 64);
  CHECK(c.forward().allow_inadmissible);
  CHECK(c.sinogram() == SinogramShape{256, 256, 1.2});

  CHECK_THROWS_AS(parse_config("gird = 64\n"), ValidationError);
  CHECK_THROWS_AS(parse_config("grid = 64\ngrid = 65\n"), ValidationError);
  CHECK_THROWS_AS(parse_config("grid = 6.5\n"), ValidationError);
  CHECK_THROWS_AS(parse_config("grid 64\n"), ValidationError);
  CHECK_THROWS_AS(parse_config("fp_tol = abc\n"), ValidationError);
  CHECK_THROWS_AS(parse_config("allow_inadmissible = maybe\n"), ValidationError);
  CHECK_THROWS_AS(parse_config("grid = 8\n"), ValidationError);
  CHECK_THROWS_AS(parse_config("s_max = 0.9\n"), ValidationError);
  CHECK_THROWS_AS(parse_config("gamma = 1\n"), ValidationError);
  try {
    parse_config("grid = 64\n\nbogus = 1\n", "run.cfg");
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("run.cfg:3") != std::string::npos);
  }
}

TEST_CASE("phantom files and relative paths") {
  TempDir tmp;
  const PhantomSpec mu = PhantomSpec::default_mu();
  const PhantomSpec back = parse_phantom(to_text(mu));
  CHECK(back.background == mu.background);
  CHECK(back.support_radius == mu.support_radius);
  REQUIRE(back.bumps.size() == mu.bumps.size());
  CHECK(back.bumps[0].center == mu.bumps[0].center);
  CHECK(back.bumps[0].amplitude == mu.bumps[0].amplitude);
  CHECK(back.bumps[0].width == mu.bumps[0].width);

  const PhantomSpec two = parse_phantom("background = 0.1\nbump = 0.2 0 0.1 0.1\nbump = -0.3 0.1 0.05 0.2\n");
  CHECK(two.bumps.size() == 2);
  CHECK_THROWS_AS(parse_phantom("bump = 0.2 0 0.1\n"), ValidationError);
  CHECK_THROWS_AS(parse_phantom("bump = 0.9 0 0.1 0.2\n"), ValidationError);
  CHECK_THROWS_AS(parse_phantom("colour = 1\n"), ValidationError);

  fs::create_directories(tmp.path / "sub");
  write_file(tmp / "sub/mu.txt", to_text(mu));
  write_file(tmp / "sub/run.cfg", "grid = 48\nmu_phantom = mu.txt\n");
  const RunConfig cfg = load_config(tmp / "sub/run.cfg");
  CHECK(fs::path(cfg.mu_phantom) == tmp.path / "sub" / "mu.txt");
  CHECK(load_phantom(cfg.mu_phantom).background == mu.background);
  CHECK(cfg.sigma_phantom.empty());
  CHECK_THROWS_AS(load_config(tmp / "none.cfg"), IoError);
}

TEST_CASE("JSON reports") {
  const RunConfig cfg;
  const Json j = to_json(cfg);
  CHECK(j.at("grid") == 128);
  CHECK(j.at("u_B") == 0.1);

  const MediumBounds b{0.2, 0.5, 0.4, 2.0};
  const Json a = to_json(check_admissible(AdmissibleData{}, b));
  CHECK(a.at("pass") == true);
  CHECK(a.at("conditions").is_array());

  const Json e = to_json(IterationError("no convergence", {0.5, 0.7}));
  CHECK(e.at("exit_code") == 2);
  CHECK(e.at("ratios").size() == 2);
  CHECK(to_json(SolverError("stuck", 1e-3)).at("residual") == 1e-3);

  TempDir tmp;
  write_json(j, tmp / "cfg.json");
  std::ifstream in(tmp / "cfg.json");
  CHECK(Json::parse(in) == j);
}
