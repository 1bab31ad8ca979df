#include "nlsym/field_io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "nlsym/error.hpp"

namespace nlsym {
namespace {

constexpr std::string_view kMagic = "NLRG1";

std::string format_double(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

std::uint64_t to_little(std::uint64_t bits) {
  if constexpr (std::endian::native == std::endian::big) return __builtin_bswap64(bits);
  return bits;
}

class Cursor {
 public:
  explicit Cursor(std::string_view s) : s_(s) {}

  std::size_t offset() const { return pos_; }

  std::string_view line() {
    const std::size_t start = pos_;
    const std::size_t nl = s_.find('\n', pos_);
    if (nl == std::string_view::npos) throw IoError("unterminated header line", start);
    pos_ = nl + 1;
    return s_.substr(start, nl - start);
  }

  std::string_view rest() const { return s_.substr(pos_); }

 private:
  std::string_view s_;
  std::size_t pos_ = 0;
};

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && line[i] == ' ') ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

template <typename T>
T parse_number(std::string_view tok, std::size_t offset, const char* what) {
  T v{};
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
    throw IoError(std::string("malformed ") + what + " '" + std::string(tok) + "'", offset);
  return v;
}

}  // namespace

void write_field(const Field& field, std::ostream& out) {
  const Grid& g = field.grid();
  out << kMagic << ' ' << g.dim() << '\n';
  for (const auto& a : g.axes())
    out << a.n << ' ' << format_double(a.h) << ' ' << format_double(a.origin) << ' ' << to_string(a.boundary)
        << '\n';
  out << '\n';
  for (double x : field.values()) {
    const std::uint64_t bits = to_little(std::bit_cast<std::uint64_t>(x));
    char raw[8];
    std::memcpy(raw, &bits, 8);
    out.write(raw, 8);
  }
}

void write_field(const Field& field, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing", 0);
  write_field(field, out);
  if (!out) throw IoError("write failed for '" + path.string() + "'", 0);
}

Field parse_field(std::string_view bytes) {
  Cursor cur(bytes);
  std::size_t at = cur.offset();
  const auto head = split_ws(cur.line());
  if (head.size() != 2 || head[0] != kMagic) throw IoError("missing NLRG1 magic", at);
  const int dim = parse_number<int>(head[1], at + kMagic.size() + 1, "dimension");
  if (dim != 1 && dim != 2) throw IoError("dimension must be 1 or 2", at);

  std::vector<Axis> axes;
  for (int d = 0; d < dim; ++d) {
    at = cur.offset();
    const auto tok = split_ws(cur.line());
    if (tok.size() != 4) throw IoError("axis line needs 4 fields", at);
    Axis a;
    a.n = parse_number<std::size_t>(tok[0], at, "point count");
    a.h = parse_number<double>(tok[1], at, "spacing");
    a.origin = parse_number<double>(tok[2], at, "origin");
    if (tok[3] == "periodic")
      a.boundary = Boundary::periodic;
    else if (tok[3] == "clamp")
      a.boundary = Boundary::clamp;
    else
      throw IoError("unknown boundary '" + std::string(tok[3]) + "'", at);
    if (a.n < 4) throw IoError("axis point count " + std::to_string(a.n) + " below 4", at);
    if (!(a.h > 0.0) || !std::isfinite(a.h) || !std::isfinite(a.origin))
      throw IoError("axis spacing/origin invalid", at);
    axes.push_back(a);
  }
  at = cur.offset();
  if (!cur.line().empty()) throw IoError("expected blank separator line", at);

  Grid grid(std::move(axes));
  const std::size_t payload_at = cur.offset();
  const std::string_view payload = cur.rest();
  const std::size_t want = grid.size() * 8;
  if (payload.size() < want) throw IoError("truncated payload", payload_at + payload.size());
  if (payload.size() > want) throw IoError("trailing bytes after payload", payload_at + want);

  std::vector<double> values(grid.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::uint64_t bits;
    std::memcpy(&bits, payload.data() + 8 * i, 8);
    values[i] = std::bit_cast<double>(to_little(bits));
    if (!std::isfinite(values[i])) throw IoError("non-finite value", payload_at + 8 * i);
  }
  return Field(std::move(grid), std::move(values));
}

Field read_field(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'", 0);
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string bytes = std::move(ss).str();
  return parse_field(bytes);
}

void write_field_csv(const Field& field, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing", 0);
  const Grid& g = field.grid();
  out << (g.dim() == 1 ? "x,value\n" : "x,y,value\n");
  char buf[96];
  for (std::size_t i = 0; i < field.size(); ++i) {
    const auto p = g.point(i);
    if (g.dim() == 1)
      std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", p[0], field[i]);
    else
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", p[0], p[1], field[i]);
    out << buf;
  }
}

}  // namespace nlsym
