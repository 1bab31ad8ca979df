#pragma once

#include <filesystem>
#include <iosfwd>

#include "nlsym/grid.hpp"

namespace nlsym {

// Binary field file:
//   NLRG1 <dim>\n
//   <n> <h> <origin> <periodic|clamp>\n      (one line per axis)
//   \n
//   row-major float64 payload, little-endian
void write_field(const Field& field, const std::filesystem::path& path);
Field read_field(const std::filesystem::path& path);

void write_field(const Field& field, std::ostream& out);
Field parse_field(std::string_view bytes);

/// Plain-text export, one `x[,y],value` row per point after a header line.
void write_field_csv(const Field& field, const std::filesystem::path& path);

}  // namespace nlsym
