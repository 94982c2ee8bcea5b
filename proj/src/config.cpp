#include "rte/config.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

namespace rte {

namespace {

struct Entry {
  std::string key;
  std::string value;
  int line;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<Entry> split_entries(const std::string& text, const std::string& origin) {
  std::vector<Entry> out;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string body = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ValidationError(origin + ":" + std::to_string(line) + ": expected 'key = value'");
    }
    Entry e{trim(body.substr(0, eq)), trim(body.substr(eq + 1)), line};
    if (e.key.empty() || e.value.empty()) {
      throw ValidationError(origin + ":" + std::to_string(line) + ": empty key or value");
    }
    out.push_back(std::move(e));
  }
  return out;
}

[[noreturn]] void bad_value(const std::string& origin, const Entry& e, const char* what) {
  throw ValidationError(origin + ":" + std::to_string(e.line) + ": " + e.key + " expects " + what +
                        ", got '" + e.value + "'");
}

double to_double(const std::string& origin, const Entry& e) {
  char* end = nullptr;
  const double v = std::strtod(e.value.c_str(), &end);
  if (end == e.value.c_str() || *end != '\0' || !std::isfinite(v)) bad_value(origin, e, "a number");
  return v;
}

long long to_integer(const std::string& origin, const Entry& e) {
  long long v = 0;
  const char* first = e.value.data();
  const char* last = first + e.value.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) bad_value(origin, e, "an integer");
  return v;
}

bool to_bool(const std::string& origin, const Entry& e) {
  if (e.value == "true" || e.value == "yes" || e.value == "1") return true;
  if (e.value == "false" || e.value == "no" || e.value == "0") return false;
  bad_value(origin, e, "true or false");
}

std::string fmt(double v) {
  std::ostringstream s;
  s << std::setprecision(17) << v;
  return s.str();
}

}  // namespace

std::string read_text_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void RunConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ValidationError(std::string("config: ") + what);
  };
  require(grid >= 16, "grid must be at least 16");
  require(n_dir >= 4, "n_dir must be at least 4");
  require(n_s >= 8 && n_ang >= 4, "need n_s >= 8 and n_ang >= 4");
  require(s_max > 1.0, "s_max must exceed the disk radius 1");
  require(step >= 0.0, "step must be nonnegative");
  require(fp_tol > 0.0 && max_iter >= 1, "need fp_tol > 0 and max_iter >= 1");
  require(lin_tol > 0.0, "lin_tol must be positive");
  require(gamma > 0.0 && gamma < 1.0, "gamma must lie in (0, 1)");
  require(mask_margin >= 0.0 && mask_margin < 1.0, "mask_margin must lie in [0, 1)");
  require(support_radius > 0.0 && support_radius < 1.0, "support_radius must lie in (0, 1)");
  require(floor >= 0.0, "floor must be nonnegative");
  require(noise >= 0.0, "noise must be nonnegative");
  require(trace_n_beta >= 4 && trace_n_dir >= 4, "trace lattice needs at least 4 x 4 samples");
}

GridPtr RunConfig::make_grid() const { return Grid2::covering(DiskDomain{}, grid); }

AdmissibleData RunConfig::data() const {
  AdmissibleData d;
  d.u_B = BoundaryTrace::constant(GammaSide::minus, u_B);
  d.T_B = constant_boundary(T_B);
  d.alpha1 = alpha1;
  d.alpha2 = alpha2;
  d.delta1 = delta1;
  d.delta2 = delta2;
  d.gamma = gamma;
  return d;
}

ForwardSettings RunConfig::forward() const {
  ForwardSettings s;
  s.n_dir = n_dir;
  s.step = step;
  s.fp_tol = fp_tol;
  s.max_iter = max_iter;
  s.lin_tol = lin_tol;
  s.support_radius = support_radius;
  s.allow_inadmissible = allow_inadmissible;
  return s;
}

InverseSettings RunConfig::inverse() const {
  InverseSettings s;
  s.n_dir = n_dir;
  s.step = step;
  s.sino = sinogram();
  s.lin_tol = lin_tol;
  s.mask_margin = mask_margin;
  s.floor = floor > 0.0 ? floor : 0.5 * alpha2;
  return s;
}

RunConfig parse_config(const std::string& text, const std::string& origin) {
  RunConfig c;
  using Setter = std::function<void(const Entry&)>;
  auto num = [&](double& dst) { return Setter([&, p = &dst](const Entry& e) { *p = to_double(origin, e); }); };
  auto integer = [&](int& dst) {
    return Setter([&, p = &dst](const Entry& e) {
      const long long v = to_integer(origin, e);
      if (v < 0 || v > 1'000'000) bad_value(origin, e, "an integer in [0, 1e6]");
      *p = static_cast<int>(v);
    });
  };
  const std::map<std::string, Setter> setters = {
      {"grid", integer(c.grid)},
      {"n_dir", integer(c.n_dir)},
      {"n_s", integer(c.n_s)},
      {"n_ang", integer(c.n_ang)},
      {"s_max", num(c.s_max)},
      {"step", num(c.step)},
      {"fp_tol", num(c.fp_tol)},
      {"max_iter", integer(c.max_iter)},
      {"lin_tol", num(c.lin_tol)},
      {"gamma", num(c.gamma)},
      {"mask_margin", num(c.mask_margin)},
      {"support_radius", num(c.support_radius)},
      {"u_B", num(c.u_B)},
      {"T_B", num(c.T_B)},
      {"alpha1", num(c.alpha1)},
      {"alpha2", num(c.alpha2)},
      {"delta1", num(c.delta1)},
      {"delta2", num(c.delta2)},
      {"allow_inadmissible", [&](const Entry& e) { c.allow_inadmissible = to_bool(origin, e); }},
      {"floor", num(c.floor)},
      {"noise", num(c.noise)},
      {"seed",
       [&](const Entry& e) {
         const long long v = to_integer(origin, e);
         if (v < 0) bad_value(origin, e, "a nonnegative integer");
         c.seed = static_cast<std::uint64_t>(v);
       }},
      {"trace_n_beta", integer(c.trace_n_beta)},
      {"trace_n_dir", integer(c.trace_n_dir)},
      {"sigma_phantom", [&](const Entry& e) { c.sigma_phantom = e.value; }},
      {"mu_phantom", [&](const Entry& e) { c.mu_phantom = e.value; }},
  };
  std::set<std::string> seen;
  for (const Entry& e : split_entries(text, origin)) {
    const auto it = setters.find(e.key);
    if (it == setters.end()) {
      throw ValidationError(origin + ":" + std::to_string(e.line) + ": unknown key '" + e.key + "'");
    }
    if (!seen.insert(e.key).second) {
      throw ValidationError(origin + ":" + std::to_string(e.line) + ": repeated key '" + e.key + "'");
    }
    it->second(e);
  }
  c.validate();
  return c;
}

RunConfig load_config(const std::string& path) {
  RunConfig c = parse_config(read_text_file(path), path);
  const std::filesystem::path base = std::filesystem::path(path).parent_path();
  for (std::string* p : {&c.sigma_phantom, &c.mu_phantom}) {
    if (!p->empty() && std::filesystem::path(*p).is_relative()) *p = (base / *p).string();
  }
  return c;
}

std::string to_text(const RunConfig& c) {
  std::ostringstream s;
  s << "grid = " << c.grid << "\n"
    << "n_dir = " << c.n_dir << "\n"
    << "n_s = " << c.n_s << "\n"
    << "n_ang = " << c.n_ang << "\n"
    << "s_max = " << fmt(c.s_max) << "\n"
    << "step = " << fmt(c.step) << "\n"
    << "fp_tol = " << fmt(c.fp_tol) << "\n"
    << "max_iter = " << c.max_iter << "\n"
    << "lin_tol = " << fmt(c.lin_tol) << "\n"
    << "gamma = " << fmt(c.gamma) << "\n"
    << "mask_margin = " << fmt(c.mask_margin) << "\n"
    << "support_radius = " << fmt(c.support_radius) << "\n"
    << "u_B = " << fmt(c.u_B) << "\n"
    << "T_B = " << fmt(c.T_B) << "\n"
    << "alpha1 = " << fmt(c.alpha1) << "\n"
    << "alpha2 = " << fmt(c.alpha2) << "\n"
    << "delta1 = " << fmt(c.delta1) << "\n"
    << "delta2 = " << fmt(c.delta2) << "\n"
    << "allow_inadmissible = " << (c.allow_inadmissible ? "true" : "false") << "\n"
    << "floor = " << fmt(c.floor) << "\n"
    << "noise = " << fmt(c.noise) << "\n"
    << "seed = " << c.seed << "\n"
    << "trace_n_beta = " << c.trace_n_beta << "\n"
    << "trace_n_dir = " << c.trace_n_dir << "\n";
  if (!c.sigma_phantom.empty()) s << "sigma_phantom = " << c.sigma_phantom << "\n";
  if (!c.mu_phantom.empty()) s << "mu_phantom = " << c.mu_phantom << "\n";
  return s.str();
}

PhantomSpec parse_phantom(const std::string& text, const std::string& origin) {
  PhantomSpec spec;
  std::set<std::string> seen;
  for (const Entry& e : split_entries(text, origin)) {
    if (e.key == "bump") {
      std::istringstream v(e.value);
      Bump b{};
      double cx = 0, cy = 0;
      std::string extra;
      if (!(v >> cx >> cy >> b.amplitude >> b.width) || (v >> extra)) {
        bad_value(origin, e, "'cx cy amplitude width'");
      }
      b.center = Vec2(cx, cy);
      spec.bumps.push_back(b);
      continue;
    }
    if (!seen.insert(e.key).second) {
      throw ValidationError(origin + ":" + std::to_string(e.line) + ": repeated key '" + e.key + "'");
    }
    if (e.key == "background") {
      spec.background = to_double(origin, e);
    } else if (e.key == "support_radius") {
      spec.support_radius = to_double(origin, e);
    } else {
      throw ValidationError(origin + ":" + std::to_string(e.line) + ": unknown key '" + e.key + "'");
    }
  }
  spec.validate();
  return spec;
}

PhantomSpec load_phantom(const std::string& path) { return parse_phantom(read_text_file(path), path); }

std::string to_text(const PhantomSpec& spec) {
  std::ostringstream s;
  s << "background = " << fmt(spec.background) << "\n"
    << "support_radius = " << fmt(spec.support_radius) << "\n";
  for (const Bump& b : spec.bumps) {
    s << "bump = " << fmt(b.center.x()) << ' ' << fmt(b.center.y()) << ' ' << fmt(b.amplitude) << ' '
      << fmt(b.width) << "\n";
  }
  return s.str();
}

}  // namespace rte
