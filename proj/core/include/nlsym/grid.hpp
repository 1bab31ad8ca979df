#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace nlsym {

enum class Boundary { periodic, clamp };

std::string_view to_string(Boundary b);
Boundary boundary_from_string(std::string_view s);

/// One lattice axis: coordinate of index j is origin + j*h.
struct Axis {
  std::size_t n = 0;
  double h = 0.0;
  double origin = 0.0;
  Boundary boundary = Boundary::clamp;

  double coord(std::ptrdiff_t j) const { return origin + static_cast<double>(j) * h; }

  /// Maps an arbitrary integer index onto [0, n) using the boundary rule.
  std::size_t resolve(std::ptrdiff_t j) const;

  /// True when the index lies outside [0, n) and the axis clamps (no wrap).
  bool outside(std::ptrdiff_t j) const {
    return boundary == Boundary::clamp && (j < 0 || j >= static_cast<std::ptrdiff_t>(n));
  }

  /// Distance from the coordinate origin to the nearest end of the axis.
  /// Periodic axes report n*h/2.
  double half_width() const;

  bool operator==(const Axis&) const = default;
};

/// Rectangular 1D or 2D lattice. Values are stored row-major: axis 0 is the
/// slow index, so a 2D point (i, j) lives at i * n[1] + j.
class Grid {
 public:
  Grid() = default;
  explicit Grid(std::vector<Axis> axes);

  static Grid line(std::size_t n, double h, double origin, Boundary b);
  static Grid plane(const Axis& x1, const Axis& x2);

  int dim() const { return static_cast<int>(axes_.size()); }
  const Axis& axis(int i) const { return axes_.at(static_cast<std::size_t>(i)); }
  const std::vector<Axis>& axes() const { return axes_; }
  std::size_t size() const;
  double cell_volume() const;
  bool fully_periodic() const;

  std::size_t index(std::size_t i0, std::size_t i1 = 0) const {
    return dim() == 1 ? i0 : i0 * axes_[1].n + i1;
  }
  std::array<std::size_t, 2> multi_index(std::size_t flat) const {
    if (dim() == 1) return {flat, 0};
    return {flat / axes_[1].n, flat % axes_[1].n};
  }
  /// Coordinates of a flat index (second entry is 0 in 1D).
  std::array<double, 2> point(std::size_t flat) const;

  bool operator==(const Grid&) const = default;

 private:
  std::vector<Axis> axes_;
};

/// Immutable scalar samples on a Grid. All values are finite.
class Field {
 public:
  Field() = default;
  Field(Grid grid, std::vector<double> values);

  static Field constant(const Grid& grid, double c);
  static Field sample(const Grid& grid, const std::function<double(double, double)>& fn);

  const Grid& grid() const { return grid_; }
  std::span<const double> values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }

  /// Sample at an arbitrary (possibly exterior) lattice index using the
  /// grid's boundary rule.
  double at(std::ptrdiff_t i0, std::ptrdiff_t i1 = 0) const;

  double max_abs() const;
  double min() const;
  double max() const;

  /// Releases the sample vector (for building a derived field without a copy).
  std::vector<double> take() && { return std::move(values_); }

 private:
  Grid grid_;
  std::vector<double> values_;
};

/// Axis-wise mask: true for points at least `band` (length units) away from
/// every clamp edge. Periodic axes never constrain.
std::vector<char> interior_mask(const Grid& grid, double band);

}  // namespace nlsym
