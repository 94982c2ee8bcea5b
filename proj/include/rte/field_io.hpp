#pragma once

#include <string>

#include "rte/fields.hpp"
#include "rte/transport.hpp"
#include "rte/xray.hpp"

namespace rte {

// Text files hold values with 17 significant digits, so every reader returns
// the exact doubles that were written. Binary files are little-endian.
//
//   field text    "# field nx ny h ox oy" then nx*ny values, row-major
//   field binary  "RTEF" u32 nx u32 ny f64 h f64 ox f64 oy f64[nx*ny]
//   angular bin   "RTEA" u32 nx u32 ny u32 n_dir f64 h f64 ox f64 oy f64[nx*ny*n_dir]
//   sino text     "# sino n_s n_ang s_max" then n_s*n_ang values, s fastest
//   sino binary   "RTES" u32 n_s u32 n_ang f64 s_max f64[n_s*n_ang]
//   trace text    "# trace side n" then n rows "beta dir_angle value"
//                 a constant trace is "# trace side 0 constant value"
//
// Readers throw IoError for unreadable or malformed files. A grid read from a
// file is attached to the unit disk.

enum class FileFormat { text, binary };

/// Binary when the path ends in ".bin", text otherwise.
FileFormat format_for(const std::string& path);

void write_field(const ScalarField& f, const std::string& path, FileFormat fmt);
ScalarField read_field(const std::string& path);
/// Reads a field and checks that it lives on `grid`'s layout.
ScalarField read_field(const std::string& path, const GridPtr& grid);

void write_angular(const AngularField& u, const std::string& path);
AngularField read_angular(const std::string& path);

void write_sinogram(const Sinogram& s, const std::string& path, FileFormat fmt);
Sinogram read_sinogram(const std::string& path);

void write_trace(const BoundaryTrace& t, const std::string& path);
BoundaryTrace read_trace(const std::string& path);

}  // namespace rte
