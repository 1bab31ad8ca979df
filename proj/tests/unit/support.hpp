#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include "nlsym/grid.hpp"

namespace testing_support {

inline nlsym::Field random_field(const nlsym::Grid& g, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<double> v(g.size());
  for (auto& x : v) x = d(rng);
  return nlsym::Field(g, std::move(v));
}

/// Band-limited random periodic field: a few random Fourier modes per axis.
inline nlsym::Field smooth_periodic(const nlsym::Grid& g, std::uint64_t seed, int modes = 3) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  struct Mode { int k1, k2; double a, phase; };
  std::vector<Mode> ms;
  for (int i = 0; i < modes; ++i) ms.push_back({1 + i, g.dim() == 2 ? i % 3 : 0, d(rng), 3.0 * d(rng)});
  const double L1 = static_cast<double>(g.axis(0).n) * g.axis(0).h;
  const double L2 = g.dim() == 2 ? static_cast<double>(g.axis(1).n) * g.axis(1).h : 1.0;
  return nlsym::Field::sample(g, [&](double x, double y) {
    double s = 0.0;
    for (const auto& m : ms) s += m.a * std::sin(2.0 * M_PI * (m.k1 * x / L1 + m.k2 * y / L2) + m.phase);
    return s;
  });
}

inline nlsym::Grid periodic_square(std::size_t n, double h) {
  const double o = -0.5 * static_cast<double>(n) * h;
  return nlsym::Grid::plane(nlsym::Axis{n, h, o, nlsym::Boundary::periodic},
                            nlsym::Axis{n, h, o, nlsym::Boundary::periodic});
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("nlsym_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace testing_support
