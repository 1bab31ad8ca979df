#include <doctest.h>

#include <cmath>
#include <set>

#include "nlsym/error.hpp"
#include "nlsym/rigidity.hpp"
#include "support.hpp"

using namespace nlsym;

namespace {

DiscreteKernel ball2(double h, double R = 1.0) {
  const double hh[2] = {h, h};
  return build_kernel(KernelSpec::tight(KernelFamily::ball_indicator, R, R, 2), hh);
}

Grid clamp_square(std::size_t n, double h) {
  const double o = -0.5 * static_cast<double>(n - 1) * h;
  return Grid::plane(Axis{n, h, o, Boundary::clamp}, Axis{n, h, o, Boundary::clamp});
}

// tanh front along (a, 1)/sqrt(a^2+1) with exact derivatives; extra(x, y) is added to u only.
SolutionBundle analytic_front(const OperatorContext& ctx, double a, double lambda = 1.0) {
  const Grid& g = ctx.grid();
  const double n = std::sqrt(a * a + 1.0);
  auto s = [&](double x, double y) { return (a * x + y) / n; };
  const Field u = Field::sample(g, [&](double x, double y) { return std::tanh(s(x, y)); });
  auto d = [&](double x, double y) {
    const double c = std::cosh(s(x, y));
    return lambda / (c * c * n);
  };
  Field u1 = Field::sample(g, [&](double x, double y) { return a * d(x, y); });
  Field u2 = Field::sample(g, d);
  return make_bundle(ctx, Nonlinearity::scaled_cubic(0.5), u, u1, u2, 0.0, "analytic");
}

}  // namespace

TEST_CASE("quotient on planar fronts") {
  const Grid g = clamp_square(41, 0.25);
  const OperatorContext ctx(ball2(0.25), g);
  for (double a : {0.0, 1.0, 0.5, -2.0}) {
    const auto b = analytic_front(ctx, a);
    const auto q = compute_quotient(b, 1e-6);
    CHECK(q.window.count > 0);
    for (std::size_t i = 0; i < g.size(); ++i)
      if (q.window.contains(i)) CHECK(std::abs(q.v[i] - a) <= 1e-8);
  }
}

TEST_CASE("quotient refuses non-monotone bundles") {
  const Grid g = clamp_square(21, 0.25);
  const OperatorContext ctx(ball2(0.25), g);
  const Field u = Field::sample(g, [](double x, double y) { return std::sin(y) * std::cos(x); });
  const auto b = make_bundle(ctx, Nonlinearity::cubic(), u);
  CHECK_FALSE(b.monotone);
  CHECK_THROWS_AS(compute_quotient(b, 1e-6), DomainError);
}

TEST_CASE("window drops frozen band and small weights") {
  const Grid g = clamp_square(21, 0.5);
  const Field w = Field::sample(g, [](double, double y) { return std::exp(-y * y); });
  const auto win = make_window(w, 1e-3, 1.0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto p = g.point(i);
    const bool expect = std::exp(-p[1] * p[1]) >= 1e-3 && std::abs(p[0]) <= 4.0 && std::abs(p[1]) <= 4.0;
    CHECK(win.contains(i) == expect);
  }
  CHECK(win.threshold == doctest::Approx(1e-3));
  CHECK_THROWS_AS(make_window(Field::constant(g, 0.0), 1e-3), DomainError);
}

TEST_CASE("cutoff shape and gradient bound") {
  const Grid g = clamp_square(161, 0.1);
  const auto c = build_cutoff(g, 3.0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto p = g.point(i);
    const double r = std::hypot(p[0], p[1]);
    if (r <= 3.0) CHECK(c.tau[i] == 1.0);
    if (r >= 6.0) CHECK(c.tau[i] == 0.0);
    CHECK(c.tau[i] >= 0.0);
    CHECK(c.tau[i] <= 1.0);
  }
  CHECK(c.measured_grad <= 15.0 / 8.0 + 3.0 * 0.1);
  CHECK(c.measured_grad >= 15.0 / 8.0 - 3.0 * 0.1);
  CHECK_THROWS_AS(build_cutoff(g, 4.5), ConfigError);
}

TEST_CASE("pair region is symmetric, near-diagonal, and grows quadratically") {
  const double h = 0.5;
  const auto k = ball2(h);
  const Grid g = clamp_square(129, h);
  const OperatorContext ctx(k, g);
  const PairRegion reg(g, 4.0);
  std::set<std::pair<std::size_t, std::size_t>> pairs;
  for_each_pair(ctx, [&](std::size_t x, std::size_t y, double) {
    if (reg.contains(x, y)) pairs.insert({x, y});
  });
  for (const auto& [x, y] : pairs) {
    CHECK(pairs.count({y, x}) == 1);
    const auto px = g.point(x), py = g.point(y);
    CHECK(std::hypot(px[0] - py[0], px[1] - py[1]) <= k.support_radius() + 1e-12);
  }
  CHECK(region_pair_count(ctx, reg) == pairs.size());
  const double c8 = static_cast<double>(region_pair_count(ctx, PairRegion(g, 8.0)));
  const double c16 = static_cast<double>(region_pair_count(ctx, PairRegion(g, 16.0)));
  CHECK(c16 / c8 <= 4.5);
  CHECK(c16 / c8 >= 3.5);
}

TEST_CASE("energies vanish on planar fronts and are positive otherwise") {
  const Grid g = clamp_square(81, 0.25);
  const OperatorContext ctx(ball2(0.25), g);
  const auto b = analytic_front(ctx, 1.0);
  const auto q = compute_quotient(b, 1e-6);
  for (double R : {2.0, 4.0}) {
    const auto cut = build_cutoff(g, R);
    const PairRegion reg(g, R);
    const auto split = energy_split(ctx, b, q, cut);
    CHECK(compute_J1(ctx, b, q, cut) <= 1e-12 * split.scale);
    const auto t = compute_J2(ctx, b, q, cut, reg);
    CHECK(t.J2 <= 1e-12 * split.scale);
    CHECK(tail_energy(ctx, b, q, reg) <= 1e-12 * split.scale);
  }

  // wavy front: v not constant
  const Field u = Field::sample(g, [](double x, double y) { return std::tanh(y + 0.3 * std::sin(x)); });
  const Field u1 = Field::sample(g, [](double x, double y) {
    const double c = std::cosh(y + 0.3 * std::sin(x));
    return 0.3 * std::cos(x) / (c * c);
  });
  const Field u2 = Field::sample(g, [](double x, double y) {
    const double c = std::cosh(y + 0.3 * std::sin(x));
    return 1.0 / (c * c);
  });
  const auto wb = make_bundle(ctx, Nonlinearity::scaled_cubic(0.5), u, u1, u2, 0.0, "analytic");
  const auto wq = compute_quotient(wb, 1e-6);
  const auto cut = build_cutoff(g, 4.0);
  const PairRegion reg(g, 4.0);
  const double J1 = compute_J1(ctx, wb, wq, cut);
  CHECK(J1 > 0.0);
  const auto t = compute_J2(ctx, wb, wq, cut, reg);
  CHECK(t.J2 > 0.0);
  CHECK(t.J2 * t.J2 <= t.cs_a * t.cs_b * (1.0 + 1e-12));
  const auto split = energy_split(ctx, wb, wq, cut);
  CHECK(J1 + split.cross == doctest::Approx(split.identity).epsilon(1e-10));
}

TEST_CASE("Cauchy-Schwarz holds for arbitrary masked fields") {
  const Grid g = clamp_square(41, 0.25);
  const OperatorContext ctx(ball2(0.25), g);
  const auto cut = build_cutoff(g, 2.0);
  const PairRegion reg(g, 2.0);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Field u = testing_support::random_field(g, seed);
    const Field u1 = testing_support::random_field(g, seed + 100);
    const Field u2 = testing_support::random_field(g, seed + 200, 0.1, 1.0);
    const auto b = make_bundle(ctx, Nonlinearity::cubic(), u, u1, u2, 0.0, "random");
    const auto q = compute_quotient(b, 1e-6);
    const auto t = compute_J2(ctx, b, q, cut, reg);
    CHECK(t.J2 * t.J2 <= t.cs_a * t.cs_b * (1.0 + 1e-12));
    CHECK(t.cs_a >= 0.0);
    CHECK(t.cs_b >= 0.0);
  }
}

TEST_CASE("harnack ratio: brute force, constants, scale invariance") {
  const Grid g = clamp_square(31, 0.25);
  const Field w = testing_support::random_field(g, 4, 0.5, 2.0);
  const auto win = make_window(w, 1e-6);
  double brute = 1.0;
  for (std::size_t x = 0; x < g.size(); ++x) {
    double hi = 0.0, lo = INFINITY;
    for (std::size_t y = 0; y < g.size(); ++y) {
      const auto px = g.point(x), py = g.point(y);
      if (std::hypot(px[0] - py[0], px[1] - py[1]) > 1.0 + 1e-12) continue;
      hi = std::max(hi, w[y]);
      lo = std::min(lo, w[y]);
    }
    brute = std::max(brute, hi / lo);
  }
  CHECK(harnack_ratio(w, 1.0, win) == doctest::Approx(brute).epsilon(1e-15));
  std::vector<double> scaled(w.values().begin(), w.values().end());
  for (auto& x : scaled) x *= 7.5;
  CHECK(harnack_ratio(Field(g, scaled), 1.0, make_window(Field(g, scaled), 1e-6)) ==
        doctest::Approx(harnack_ratio(w, 1.0, win)).epsilon(1e-14));
  const Field c = Field::constant(g, 3.0);
  CHECK(harnack_ratio(c, 1.0, make_window(c, 1e-6)) == 1.0);

  // tails below the floor are excluded and the ratio stays finite
  const Field bump = Field::sample(g, [](double, double y) { return std::exp(-20.0 * y * y); });
  CHECK(std::isfinite(harnack_ratio(bump, 0.5, make_window(bump, 1e-3))));
}

TEST_CASE("direction estimates") {
  const Grid g = clamp_square(21, 0.25);
  const Field w = testing_support::random_field(g, 8, 0.2, 1.0);
  const auto win = make_window(w, 1e-6);
  auto d = estimate_direction(Field::constant(g, 1.0), w, win);
  CHECK(d.a == doctest::Approx(1.0));
  CHECK(d.omega[0] == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(d.omega[1] == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(d.v_stddev <= 1e-15);
  d = estimate_direction(Field::constant(g, 0.0), w, win);
  CHECK(d.omega == std::array<double, 2>{0.0, 1.0});

  // scale invariance in the weights
  const Field v = testing_support::random_field(g, 9);
  std::vector<double> w2(w.values().begin(), w.values().end());
  for (auto& x : w2) x *= 3.0;
  const auto a = estimate_direction(v, w, win), b = estimate_direction(v, Field(g, w2), win);
  CHECK(a.a == doctest::Approx(b.a).epsilon(1e-14));
  CHECK(a.v_stddev == doctest::Approx(b.v_stddev).epsilon(1e-14));

  // tilted front bundle
  const OperatorContext ctx(ball2(0.25), clamp_square(41, 0.25));
  const auto tb = analytic_front(ctx, 0.5, 2.0);
  const auto q = compute_quotient(tb, 1e-6);
  const auto e = estimate_direction(q.v, tb.u2, q.window);
  CHECK(std::abs(e.a - 0.5) <= 1e-6);
  CHECK(std::hypot(e.omega[0], e.omega[1]) == doctest::Approx(1.0));
}

TEST_CASE("window components separate disjoint blobs") {
  const Grid g = clamp_square(41, 0.25);
  const OperatorContext ctx(ball2(0.25), g);
  const Field w = Field::sample(g, [](double x, double) { return std::abs(x) > 2.0 ? 1.0 : 1e-9; });
  const auto win = make_window(w, 1e-3);
  const auto c = window_components(ctx, win);
  CHECK(c.count == 2);
  CHECK(c.label[g.index(0, 20)] != c.label[g.index(40, 20)]);
  CHECK(c.label[g.index(20, 20)] == -1);
}

TEST_CASE("planarity error: planar fields pass, ripples are caught") {
  for (double h : {0.2, 0.1}) {
    const auto n = static_cast<std::size_t>(std::llround(8.0 / h)) + 1;
    const Grid g = clamp_square(n, h);
    const double s2 = 1.0 / std::sqrt(2.0);
    const Field u = Field::sample(g, [&](double x, double y) { return std::tanh(s2 * (x + y)); });
    const auto win = make_window(Field::constant(g, 1.0), 1e-6);
    CHECK(planarity_error(u, {s2, s2}, win) <= 5.0 * h * h);
    const Field r = Field::sample(g, [&](double x, double y) { return std::tanh(y) + 0.1 * std::sin(x); });
    CHECK(planarity_error(r, {0.0, 1.0}, win) == doctest::Approx(0.1).epsilon(0.05));
  }
  const Grid g = clamp_square(11, 0.5);
  CHECK_THROWS_AS(planarity_error(Field::constant(g, 0.0), {1.0, 1.0}, make_window(Field::constant(g, 1.0), 1e-6)),
                  ConfigError);
}

TEST_CASE("stability residual: guard and negative control") {
  const Grid g = Grid::plane(Axis{32, 0.25, -4, Boundary::periodic}, Axis{33, 0.25, -4, Boundary::clamp});
  const OperatorContext ctx(ball2(0.25), g);
  const auto b = analytic_front(ctx, 0.0);
  const auto win = make_window(b, 1e-6);
  const auto f = Nonlinearity::scaled_cubic(0.5);
  CHECK_THROWS_AS(stability_residual(ctx, f, b, Field::constant(g, -1.0), win), DomainError);
  const double rnd = stability_residual(ctx, f, b, testing_support::random_field(g, 3, 0.5, 1.5), win);
  CHECK(rnd > 0.1);
}

TEST_CASE("verification on a manufactured planar solution") {
  const Grid g = clamp_square(129, 0.25);
  const auto k = ball2(0.25);
  const OperatorContext ctx(k, g);
  const auto f = Nonlinearity::scaled_cubic(0.5);
  ProfileOptions po;
  po.scheme = DerivativeScheme::centered2;
  const auto b = manufacture_planar(k, f, g, 1.0, po);
  VerifyOptions vo;
  vo.R_list = {2.0, 4.0, 8.0};
  const auto r = verify_energy_chain(ctx, f, b, vo);
  for (const auto& row : r.rows) {
    CHECK(row.J1 == 0.0);
    CHECK(row.J2 == 0.0);
    CHECK(row.tail_energy == 0.0);
    CHECK(row.cs_holds);
    CHECK(row.chain_holds);
  }
  CHECK(r.direction.a == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.harnack_C >= 1.0);
  CHECK(r.planar == (r.planarity_error_inf <= vo.planarity_threshold));
  CHECK(r.to_csv().rfind(RigidityReport::csv_header(), 0) == 0);
}
