#include "nlsym/grid.hpp"

#include <algorithm>
#include <cmath>

#include "nlsym/error.hpp"

namespace nlsym {

std::string_view to_string(Boundary b) { return b == Boundary::periodic ? "periodic" : "clamp"; }

Boundary boundary_from_string(std::string_view s) {
  if (s == "periodic") return Boundary::periodic;
  if (s == "clamp") return Boundary::clamp;
  throw ConfigError("unknown boundary rule '" + std::string(s) + "'");
}

std::size_t Axis::resolve(std::ptrdiff_t j) const {
  const auto len = static_cast<std::ptrdiff_t>(n);
  if (j >= 0 && j < len) return static_cast<std::size_t>(j);
  if (boundary == Boundary::periodic) {
    std::ptrdiff_t r = j % len;
    if (r < 0) r += len;
    return static_cast<std::size_t>(r);
  }
  return j < 0 ? 0 : n - 1;
}

double Axis::half_width() const {
  if (boundary == Boundary::periodic) return 0.5 * static_cast<double>(n) * h;
  const double lo = origin;
  const double hi = coord(static_cast<std::ptrdiff_t>(n) - 1);
  if (lo > 0.0 || hi < 0.0) return 0.0;
  return std::min(-lo, hi);
}

Grid::Grid(std::vector<Axis> axes) : axes_(std::move(axes)) {
  if (axes_.empty() || axes_.size() > 2) throw ConfigError("grid dimension must be 1 or 2");
  for (const auto& a : axes_) {
    if (a.n < 4) throw ConfigError("grid axis needs at least 4 points, got " + std::to_string(a.n));
    if (!(a.h > 0.0) || !std::isfinite(a.h)) throw ConfigError("grid spacing must be positive and finite");
    if (!std::isfinite(a.origin)) throw ConfigError("grid origin must be finite");
  }
}

Grid Grid::line(std::size_t n, double h, double origin, Boundary b) { return Grid({Axis{n, h, origin, b}}); }

Grid Grid::plane(const Axis& x1, const Axis& x2) { return Grid({x1, x2}); }

std::size_t Grid::size() const {
  std::size_t s = 1;
  for (const auto& a : axes_) s *= a.n;
  return axes_.empty() ? 0 : s;
}

double Grid::cell_volume() const {
  double v = 1.0;
  for (const auto& a : axes_) v *= a.h;
  return v;
}

bool Grid::fully_periodic() const {
  return std::all_of(axes_.begin(), axes_.end(), [](const Axis& a) { return a.boundary == Boundary::periodic; });
}

std::array<double, 2> Grid::point(std::size_t flat) const {
  const auto [i0, i1] = multi_index(flat);
  if (dim() == 1) return {axes_[0].coord(static_cast<std::ptrdiff_t>(i0)), 0.0};
  return {axes_[0].coord(static_cast<std::ptrdiff_t>(i0)), axes_[1].coord(static_cast<std::ptrdiff_t>(i1))};
}

Field::Field(Grid grid, std::vector<double> values) : grid_(std::move(grid)), values_(std::move(values)) {
  if (values_.size() != grid_.size())
    throw ConfigError("field has " + std::to_string(values_.size()) + " values, grid expects " +
                      std::to_string(grid_.size()));
  for (std::size_t i = 0; i < values_.size(); ++i)
    if (!std::isfinite(values_[i])) throw DomainError("non-finite field value at index " + std::to_string(i));
}

Field Field::constant(const Grid& grid, double c) { return Field(grid, std::vector<double>(grid.size(), c)); }

Field Field::sample(const Grid& grid, const std::function<double(double, double)>& fn) {
  std::vector<double> v(grid.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto p = grid.point(i);
    v[i] = fn(p[0], p[1]);
  }
  return Field(grid, std::move(v));
}

double Field::at(std::ptrdiff_t i0, std::ptrdiff_t i1) const {
  const std::size_t r0 = grid_.axis(0).resolve(i0);
  if (grid_.dim() == 1) return values_[r0];
  return values_[grid_.index(r0, grid_.axis(1).resolve(i1))];
}

double Field::max_abs() const {
  double m = 0.0;
  for (double x : values_) m = std::max(m, std::abs(x));
  return m;
}

double Field::min() const { return *std::min_element(values_.begin(), values_.end()); }
double Field::max() const { return *std::max_element(values_.begin(), values_.end()); }

std::vector<char> interior_mask(const Grid& grid, double band) {
  std::vector<char> mask(grid.size(), 1);
  if (band <= 0.0) return mask;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    const auto mi = grid.multi_index(i);
    for (int a = 0; a < grid.dim(); ++a) {
      const Axis& ax = grid.axis(a);
      if (ax.boundary != Boundary::clamp) continue;
      const double lo = static_cast<double>(mi[static_cast<std::size_t>(a)]) * ax.h;
      const double hi = static_cast<double>(ax.n - 1 - mi[static_cast<std::size_t>(a)]) * ax.h;
      if (lo < band - 1e-12 || hi < band - 1e-12) mask[i] = 0;
    }
  }
  return mask;
}

}  // namespace nlsym
