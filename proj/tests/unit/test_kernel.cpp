#include <doctest.h>

#include <cmath>
#include <fstream>
#include <map>

#include "nlsym/error.hpp"
#include "nlsym/kernel.hpp"
#include "support.hpp"

using namespace nlsym;

namespace {

// Midpoint rule for int_0^R0 profile(r) * (2 pi r)^{dim-1} dr (doubled in 1D); cell
// edges fall on r0, so the jump of the indicator families costs nothing.
double radial_mass(const KernelSpec& s) {
  const int n = 400000;
  const double h = s.R0 / n;
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    const double r = (i + 0.5) * h;
    acc += s.profile(r) * (s.dim == 1 ? 2.0 : 2.0 * M_PI * r);
  }
  return acc * h;
}

}  // namespace

TEST_CASE("spec validation") {
  auto s = KernelSpec::tight(KernelFamily::smooth_bump, 1.0, 2.0, 2);
  CHECK_NOTHROW(s.validate());
  s.r0 = 3.0;
  CHECK_THROWS_AS(s.validate(), SpecError);
  s = KernelSpec::tight(KernelFamily::ball_indicator, 1.0, 1.0, 2);
  s.m0 = 2.0 * s.M0;
  CHECK_THROWS_AS(s.validate(), SpecError);
  CHECK_THROWS_AS(kernel_family_from_string("gaussian"), ConfigError);
  for (auto f : {KernelFamily::ball_indicator, KernelFamily::smooth_bump, KernelFamily::annular_mix})
    CHECK(kernel_family_from_string(to_string(f)) == f);
}

TEST_CASE("continuum densities match closed forms and quadrature") {
  CHECK(KernelSpec::tight(KernelFamily::ball_indicator, 1, 1, 2).plateau_density() == doctest::Approx(1.0 / M_PI));
  CHECK(KernelSpec::tight(KernelFamily::ball_indicator, 1, 1, 1).plateau_density() == doctest::Approx(0.5));
  for (int dim : {1, 2})
    for (auto f : {KernelFamily::ball_indicator, KernelFamily::smooth_bump, KernelFamily::annular_mix}) {
      auto s = KernelSpec::tight(f, 1.0, 2.0, dim);
      if (f == KernelFamily::ball_indicator) s = KernelSpec::tight(f, 2.0, 2.0, dim);
      CHECK(s.continuum_mass() == doctest::Approx(radial_mass(s)).epsilon(1e-6));
    }
}

TEST_CASE("2D ball kernel: equal weights on in-ball offsets, unit mass") {
  const double h = 0.125;
  const double hh[2] = {h, h};
  const auto k = build_kernel(KernelSpec::tight(KernelFamily::ball_indicator, 1, 1, 2), hh);
  std::size_t count = 0;
  for (int i = -8; i <= 8; ++i)
    for (int j = -8; j <= 8; ++j)
      if (i * i + j * j <= 64) ++count;
  REQUIRE(k.taps().size() == count);
  const double w = 1.0 / (static_cast<double>(count) * h * h);
  for (const auto& t : k.taps()) CHECK(t.weight == doctest::Approx(w).epsilon(1e-14));
  CHECK(std::abs(k.total_weight() - 1.0) <= 1e-14);
  CHECK(k.support_radius() == doctest::Approx(1.0));
  // quadrature slack against 1/pi
  CHECK(k.quadrature_slack() == doctest::Approx(std::abs(M_PI / (static_cast<double>(count) * h * h) - 1.0)));
}

TEST_CASE("1D ball kernel has density 1/2 up to the lattice count") {
  const double h = 0.05;
  const auto k = build_kernel(KernelSpec::tight(KernelFamily::ball_indicator, 1, 1, 1), std::span(&h, 1));
  CHECK(k.taps().size() == 41);
  for (const auto& t : k.taps()) CHECK(t.weight == doctest::Approx(1.0 / (41 * h)));
  CHECK(std::abs(k.total_weight() - 1.0) <= 1e-14);
}

TEST_CASE("resolution guard") {
  const double hh[2] = {0.6, 0.5};
  CHECK_THROWS_AS(build_kernel(KernelSpec::tight(KernelFamily::ball_indicator, 1, 1, 2), hh), ResolutionError);
}

TEST_CASE("every family validates on the lattice") {
  const double hh[2] = {0.25, 0.25};
  for (auto f : {KernelFamily::ball_indicator, KernelFamily::smooth_bump, KernelFamily::annular_mix}) {
    auto s = KernelSpec::tight(f, 1.0, f == KernelFamily::ball_indicator ? 1.0 : 2.0, 2);
    const auto k = build_kernel(s, hh);
    const auto r = validate_kernel(k, s);
    CHECK_MESSAGE(r.passed(), r.to_text());
    CHECK(r.evenness_defect == 0.0);
    CHECK(r.normalization_defect <= 1e-14);
  }
}

TEST_CASE("smooth bump with loose bounds validates; enumerated bounds agree") {
  KernelSpec s;
  s.family = KernelFamily::smooth_bump;
  s.r0 = 1.0;
  s.R0 = 2.0;
  s.m0 = 0.05;
  s.M0 = 0.5;
  s.dim = 2;
  const double hh[2] = {0.2, 0.2};
  const auto k = build_kernel(s, hh);
  CHECK(validate_kernel(k, s).passed());
  double lo = INFINITY, hi = 0.0;
  for (const auto& t : k.taps()) {
    const double r = k.offset_length(t);
    hi = std::max(hi, t.weight);
    if (r <= s.r0 - 0.2) lo = std::min(lo, t.weight);
    CHECK(r <= s.R0);
  }
  CHECK(lo >= s.m0);
  CHECK(hi <= s.M0);
}

TEST_CASE("asymmetric and over-long stencils fail validation") {
  const double hh[2] = {0.25, 0.25};
  const auto spec = KernelSpec::tight(KernelFamily::ball_indicator, 1, 1, 2);
  auto taps = build_kernel(spec, hh).taps();
  for (auto& t : taps)
    if (t.offset == std::array<int, 2>{2, 1}) t.weight *= 1.5;
  auto r = validate_kernel(DiscreteKernel(2, {0.25, 0.25}, taps), spec);
  CHECK_FALSE(r.even);
  CHECK_FALSE(r.passed());
  CHECK(((r.evenness_offender == std::array<int, 2>{2, 1}) || (r.evenness_offender == std::array<int, 2>{-2, -1})));

  taps = build_kernel(spec, hh).taps();
  taps.push_back({{5, 0}, 1e-3});
  taps.push_back({{-5, 0}, 1e-3});
  r = validate_kernel(DiscreteKernel(2, {0.25, 0.25}, taps), spec);
  CHECK_FALSE(r.support);
  CHECK(std::abs(r.support_offender[0]) == 5);
}

TEST_CASE("projection onto a lattice direction preserves mass and evenness") {
  const double hh[2] = {0.25, 0.25};
  const auto k2 = build_kernel(KernelSpec::tight(KernelFamily::ball_indicator, 1, 1, 2), hh);
  for (auto [p, q] : {std::pair{0, 1}, std::pair{1, 1}, std::pair{1, 2}, std::pair{-2, 1}}) {
    const auto k1 = project_kernel(k2, p, q);
    CHECK(k1.dim() == 1);
    CHECK(k1.total_weight() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(k1.spacing()[0] == doctest::Approx(0.25 / std::hypot(p, q)));
    std::map<int, double> w;
    for (const auto& t : k1.taps()) w[t.offset[0]] = t.weight;
    for (const auto& [o, x] : w) CHECK(w[-o] == x);
    // second moment along the direction is preserved
    double m2 = 0.0, m2p = 0.0;
    const double c = p / std::hypot(p, q), s = q / std::hypot(p, q);
    for (const auto& t : k2.taps()) {
      const auto d = k2.offset_vector(t);
      m2 += k2.mass(t) * std::pow(c * d[0] + s * d[1], 2);
    }
    for (const auto& t : k1.taps()) m2p += k1.mass(t) * std::pow(k1.offset_vector(t)[0], 2);
    CHECK(m2p == doctest::Approx(m2).epsilon(1e-12));
  }
  CHECK_THROWS_AS(project_kernel(k2, 2, 4), ConfigError);
}

TEST_CASE("stencil csv round trip") {
  const auto dir = testing_support::scratch_dir("kcsv");
  const double hh[2] = {0.25, 0.5};
  const auto k = build_kernel(KernelSpec::tight(KernelFamily::annular_mix, 1.0, 1.5, 2), hh);
  write_kernel_csv(k, dir / "k.csv");
  const auto r = read_kernel_csv(dir / "k.csv", 2, {0.25, 0.5});
  REQUIRE(r.taps().size() == k.taps().size());
  for (std::size_t i = 0; i < k.taps().size(); ++i) {
    CHECK(r.taps()[i].offset == k.taps()[i].offset);
    CHECK(r.taps()[i].weight == k.taps()[i].weight);
  }
}
