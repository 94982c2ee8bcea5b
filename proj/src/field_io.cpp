#include "rte/field_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace rte {

namespace {

std::ofstream open_out(const std::string& path, bool binary) {
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  return in;
}

void finish(std::ostream& out, const std::string& path) {
  out.flush();
  if (!out) throw IoError("write to '" + path + "' failed");
}

template <class T>
T to_le(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
    std::memcpy(&v, b, sizeof(T));
  }
  return v;
}

template <class T>
void put(std::ostream& out, T v) {
  v = to_le(v);
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& in, const std::string& path) {
  T v;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) throw IoError("'" + path + "': truncated binary file");
  return to_le(v);
}

void put_values(std::ostream& out, std::span<const double> vals) {
  for (double v : vals) put(out, v);
}

void get_values(std::istream& in, std::span<double> vals, const std::string& path) {
  for (double& v : vals) v = get<double>(in, path);
  if (in.peek() != std::char_traits<char>::eof()) throw IoError("'" + path + "': trailing bytes");
}

std::string magic_of(std::istream& in) {
  char m[4] = {0, 0, 0, 0};
  in.read(m, 4);
  in.clear();
  in.seekg(0);
  return std::string(m, 4);
}

void text_values(std::ostream& out, std::span<const double> vals, std::size_t per_line) {
  out << std::setprecision(17);
  for (std::size_t k = 0; k < vals.size(); ++k) {
    out << vals[k] << ((k + 1) % per_line == 0 || k + 1 == vals.size() ? '\n' : ' ');
  }
}

// Reads exactly vals.size() numbers; strtod parses the 17-digit form back to
// the same double.
void read_text_values(std::istream& in, std::span<double> vals, const std::string& path) {
  std::string tok;
  for (double& v : vals) {
    if (!(in >> tok)) throw IoError("'" + path + "': too few values");
    char* end = nullptr;
    v = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() || *end != '\0') throw IoError("'" + path + "': bad number '" + tok + "'");
  }
  if (in >> tok) throw IoError("'" + path + "': too many values");
}

std::istringstream header_line(std::istream& in, const std::string& expect, const std::string& path) {
  std::string line;
  if (!std::getline(in, line)) throw IoError("'" + path + "': empty file");
  std::istringstream hs(line);
  std::string hash, tag;
  hs >> hash >> tag;
  if (hash != "#" || tag != expect) throw IoError("'" + path + "': expected a '# " + expect + "' header");
  return hs;
}

GridPtr make_grid(long nx, long ny, double h, double ox, double oy, const std::string& path) {
  if (nx < 4 || ny < 4 || !(h > 0.0) || !std::isfinite(ox) || !std::isfinite(oy) || nx > 100'000 ||
      ny > 100'000) {
    throw IoError("'" + path + "': invalid grid header");
  }
  return std::make_shared<const Grid2>(static_cast<int>(nx), static_cast<int>(ny), h, Vec2(ox, oy));
}

}  // namespace

FileFormat format_for(const std::string& path) {
  return path.size() >= 4 && path.compare(path.size() - 4, 4, ".bin") == 0 ? FileFormat::binary
                                                                           : FileFormat::text;
}

void write_field(const ScalarField& f, const std::string& path, FileFormat fmt) {
  const Grid2& g = f.grid();
  if (fmt == FileFormat::binary) {
    auto out = open_out(path, true);
    out.write("RTEF", 4);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(g.nx()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(g.ny()));
    put(out, g.h());
    put(out, g.origin().x());
    put(out, g.origin().y());
    put_values(out, f.values());
    finish(out, path);
    return;
  }
  auto out = open_out(path, false);
  out << std::setprecision(17) << "# field " << g.nx() << ' ' << g.ny() << ' ' << g.h() << ' '
      << g.origin().x() << ' ' << g.origin().y() << '\n';
  text_values(out, f.values(), static_cast<std::size_t>(g.nx()));
  finish(out, path);
}

ScalarField read_field(const std::string& path) {
  auto in = open_in(path);
  if (magic_of(in) == "RTEF") {
    in.seekg(4);
    const auto nx = get<std::uint32_t>(in, path);
    const auto ny = get<std::uint32_t>(in, path);
    const double h = get<double>(in, path);
    const double ox = get<double>(in, path);
    const double oy = get<double>(in, path);
    ScalarField f(make_grid(nx, ny, h, ox, oy, path));
    get_values(in, f.values(), path);
    return f;
  }
  auto hs = header_line(in, "field", path);
  long nx = 0, ny = 0;
  double h = 0, ox = 0, oy = 0;
  if (!(hs >> nx >> ny >> h >> ox >> oy)) throw IoError("'" + path + "': malformed field header");
  ScalarField f(make_grid(nx, ny, h, ox, oy, path));
  read_text_values(in, f.values(), path);
  return f;
}

ScalarField read_field(const std::string& path, const GridPtr& grid) {
  ScalarField raw = read_field(path);
  if (!raw.grid().same_layout(*grid)) {
    throw ValidationError("'" + path + "': field grid does not match the configured grid");
  }
  return ScalarField(grid, std::vector<double>(raw.values().begin(), raw.values().end()));
}

void write_angular(const AngularField& u, const std::string& path) {
  const Grid2& g = u.grid();
  auto out = open_out(path, true);
  out.write("RTEA", 4);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(g.nx()));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(g.ny()));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(u.n_dir()));
  put(out, g.h());
  put(out, g.origin().x());
  put(out, g.origin().y());
  put_values(out, u.values());
  finish(out, path);
}

AngularField read_angular(const std::string& path) {
  auto in = open_in(path);
  if (magic_of(in) != "RTEA") throw IoError("'" + path + "': not an angular field file");
  in.seekg(4);
  const auto nx = get<std::uint32_t>(in, path);
  const auto ny = get<std::uint32_t>(in, path);
  const auto nd = get<std::uint32_t>(in, path);
  const double h = get<double>(in, path);
  const double ox = get<double>(in, path);
  const double oy = get<double>(in, path);
  if (nd < 1 || nd > 100'000) throw IoError("'" + path + "': invalid direction count");
  AngularField u(make_grid(nx, ny, h, ox, oy, path), static_cast<int>(nd));
  get_values(in, u.values(), path);
  return u;
}

void write_sinogram(const Sinogram& s, const std::string& path, FileFormat fmt) {
  const SinogramShape& sh = s.shape();
  if (fmt == FileFormat::binary) {
    auto out = open_out(path, true);
    out.write("RTES", 4);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(sh.n_s));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(sh.n_ang));
    put(out, sh.s_max);
    put_values(out, s.values());
    finish(out, path);
    return;
  }
  auto out = open_out(path, false);
  out << std::setprecision(17) << "# sino " << sh.n_s << ' ' << sh.n_ang << ' ' << sh.s_max << '\n';
  text_values(out, s.values(), static_cast<std::size_t>(sh.n_s));
  finish(out, path);
}

Sinogram read_sinogram(const std::string& path) {
  auto in = open_in(path);
  SinogramShape sh;
  const bool binary = magic_of(in) == "RTES";
  if (binary) {
    in.seekg(4);
    sh.n_s = static_cast<int>(get<std::uint32_t>(in, path));
    sh.n_ang = static_cast<int>(get<std::uint32_t>(in, path));
    sh.s_max = get<double>(in, path);
  } else {
    auto hs = header_line(in, "sino", path);
    if (!(hs >> sh.n_s >> sh.n_ang >> sh.s_max)) throw IoError("'" + path + "': malformed sinogram header");
  }
  try {
    sh.validate();
  } catch (const ValidationError& e) {
    throw IoError("'" + path + "': " + e.what());
  }
  Sinogram s(sh);
  if (binary) {
    get_values(in, s.values(), path);
  } else {
    read_text_values(in, s.values(), path);
  }
  return s;
}

void write_trace(const BoundaryTrace& t, const std::string& path) {
  auto out = open_out(path, false);
  out << std::setprecision(17) << "# trace " << to_string(t.side()) << ' ' << t.samples().size();
  if (t.is_constant()) out << " constant " << t.constant_value();
  out << '\n';
  for (const TraceSample& s : t.samples()) out << s.beta << ' ' << s.dir_angle << ' ' << s.value << '\n';
  finish(out, path);
}

BoundaryTrace read_trace(const std::string& path) {
  auto in = open_in(path);
  auto hs = header_line(in, "trace", path);
  std::string side_name;
  long n = -1;
  if (!(hs >> side_name >> n) || n < 0) throw IoError("'" + path + "': malformed trace header");
  GammaSide side;
  if (side_name == to_string(GammaSide::minus)) {
    side = GammaSide::minus;
  } else if (side_name == to_string(GammaSide::plus)) {
    side = GammaSide::plus;
  } else {
    throw IoError("'" + path + "': unknown trace side '" + side_name + "'");
  }
  std::string extra;
  if (hs >> extra) {
    double value = 0.0;
    if (extra != "constant" || !(hs >> value) || n != 0) throw IoError("'" + path + "': malformed trace header");
    read_text_values(in, {}, path);
    return BoundaryTrace::constant(side, value);
  }
  std::vector<double> flat(static_cast<std::size_t>(n) * 3);
  read_text_values(in, flat, path);
  std::vector<TraceSample> samples(static_cast<std::size_t>(n));
  for (std::size_t k = 0; k < samples.size(); ++k) samples[k] = {flat[3 * k], flat[3 * k + 1], flat[3 * k + 2]};
  return BoundaryTrace::from_samples(side, std::move(samples));
}

}  // namespace rte
