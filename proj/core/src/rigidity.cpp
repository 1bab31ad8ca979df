#include "nlsym/rigidity.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "nlsym/error.hpp"
#include "nlsym/parallel.hpp"

namespace nlsym {
namespace {

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double smoothstep5(double t) { return t * t * t * (t * (6.0 * t - 15.0) + 10.0); }

void require_2d(const SolutionBundle& b) {
  if (b.dim() != 2) throw ConfigError("rigidity checks need a 2D bundle");
}

struct UnionFind {
  std::vector<std::size_t> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), std::size_t{0}); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

}  // namespace

Window make_window(const Field& weight, double eps_floor, double frozen_band) {
  if (!(eps_floor > 0.0) || eps_floor >= 1.0) throw ConfigError("eps_floor must lie in (0, 1)");
  const auto free = interior_mask(weight.grid(), frozen_band);
  const auto w = weight.values();
  double top = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i)
    if (free[i]) top = std::max(top, w[i]);
  if (!(top > 0.0)) throw DomainError("evaluation window is empty: no positive derivative");
  Window win;
  win.eps_floor = eps_floor;
  win.threshold = eps_floor * top;
  win.mask.assign(w.size(), 0);
  for (std::size_t i = 0; i < w.size(); ++i)
    if (free[i] && w[i] >= win.threshold && w[i] > 0.0) {
      win.mask[i] = 1;
      ++win.count;
    }
  if (win.count == 0) throw DomainError("evaluation window is empty");
  win.fraction = static_cast<double>(win.count) / static_cast<double>(w.size());
  return win;
}

Window make_window(const SolutionBundle& bundle, double eps_floor) {
  return make_window(bundle.monotone_derivative(), eps_floor, bundle.frozen_band);
}

Quotient compute_quotient(const SolutionBundle& bundle, double eps_floor) {
  require_2d(bundle);
  if (!bundle.monotone) throw DomainError("bundle is not monotone in x2; the quotient u1/u2 is undefined");
  Quotient q{Field(), make_window(bundle, eps_floor)};
  std::vector<double> v(bundle.u.size(), 0.0);
  for (std::size_t i = 0; i < v.size(); ++i)
    if (q.window.contains(i)) v[i] = bundle.u1[i] / bundle.u2[i];
  q.v = Field(bundle.u.grid(), std::move(v));
  return q;
}

Components window_components(const OperatorContext& ctx, const Window& w) {
  UnionFind uf(w.mask.size());
  for_each_pair(ctx, [&](std::size_t x, std::size_t y, double) {
    if (w.mask[x] && w.mask[y]) uf.unite(x, y);
  });
  Components c;
  c.label.assign(w.mask.size(), -1);
  std::vector<int> root_label(w.mask.size(), -1);
  for (std::size_t i = 0; i < w.mask.size(); ++i) {
    if (!w.mask[i]) continue;
    const std::size_t r = uf.find(i);
    if (root_label[r] < 0) root_label[r] = c.count++;
    c.label[i] = root_label[r];
  }
  return c;
}

Cutoff build_cutoff(const Grid& grid, double R) {
  if (!(R > 0.0)) throw ConfigError("cutoff radius must be positive");
  for (int a = 0; a < grid.dim(); ++a)
    if (2.0 * R > grid.axis(a).half_width() * (1.0 + 1e-12))
      throw ConfigError("cutoff support B_2R (R=" + num(R) + ") exceeds the grid half-width on axis " +
                        std::to_string(a));
  Cutoff c;
  c.R = R;
  c.tau = Field::sample(grid, [R](double x, double y) {
    const double t = std::clamp((2.0 * R - std::hypot(x, y)) / R, 0.0, 1.0);
    return std::min(1.0, smoothstep5(t));
  });
  double g = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto mi = grid.multi_index(i);
    double s2 = 0.0;
    for (int a = 0; a < grid.dim(); ++a) {
      const auto j = static_cast<std::ptrdiff_t>(mi[static_cast<std::size_t>(a)]);
      const double h = grid.axis(a).h;
      const double plus = a == 0 ? c.tau.at(j + 1, static_cast<std::ptrdiff_t>(mi[1])) : c.tau.at(static_cast<std::ptrdiff_t>(mi[0]), j + 1);
      const double minus = a == 0 ? c.tau.at(j - 1, static_cast<std::ptrdiff_t>(mi[1])) : c.tau.at(static_cast<std::ptrdiff_t>(mi[0]), j - 1);
      const double d = (plus - minus) / (2.0 * h);
      s2 += d * d;
    }
    g = std::max(g, std::sqrt(s2));
  }
  c.measured_grad = g * R;
  return c;
}

PairRegion::PairRegion(const Grid& grid, double R) : r2_(grid.size()), R_(R) {
  for (std::size_t i = 0; i < r2_.size(); ++i) {
    const auto p = grid.point(i);
    r2_[i] = p[0] * p[0] + p[1] * p[1];
  }
}

bool PairRegion::contains(std::size_t x, std::size_t y) const {
  const double in2 = 4.0 * R_ * R_;
  const double in1 = R_ * R_;
  const bool near = r2_[x] <= in2 || r2_[y] <= in2;
  const bool core = r2_[x] <= in1 && r2_[y] <= in1;
  return near && !core;
}

std::size_t region_pair_count(const OperatorContext& ctx, const PairRegion& region) {
  std::size_t count = 0;
  for_each_pair(ctx, [&](std::size_t x, std::size_t y, double) { count += region.contains(x, y) ? 1 : 0; });
  return count;
}

double compute_J1(const OperatorContext& ctx, const SolutionBundle& bundle, const Quotient& q, const Cutoff& cut) {
  const auto v = q.v.values();
  const auto u2 = bundle.u2.values();
  const auto tau = cut.tau.values();
  const auto& W = q.window.mask;
  return pair_sum(ctx, [&](std::size_t x, std::size_t y, double m) {
    if (!W[x] || !W[y]) return 0.0;
    const double dv = v[x] - v[y];
    return dv * dv * tau[x] * tau[x] * u2[x] * u2[y] * m;
  });
}

J2Terms compute_J2(const OperatorContext& ctx, const SolutionBundle& bundle, const Quotient& q, const Cutoff& cut,
                   const PairRegion& region) {
  const auto v = q.v.values();
  const auto u2 = bundle.u2.values();
  const auto tau = cut.tau.values();
  const auto& W = q.window.mask;
  const auto s = pair_sums(ctx, 4, [&](std::size_t x, std::size_t y, double m, double* acc) {
    if (!W[x] || !W[y] || !region.contains(x, y)) return;
    const double w = u2[x] * u2[y] * m;
    const double dv = v[x] - v[y];
    const double dt = tau[x] - tau[y];
    const double st = tau[x] + tau[y];
    acc[0] += std::abs(dv) * std::abs(dt) * std::abs(st) * std::abs(v[y]) * w;
    acc[1] += dv * dv * st * st * w;
    acc[2] += dt * dt * v[y] * v[y] * w;
    acc[3] += 1.0;
  });
  return {s[0], s[1], s[2], static_cast<std::size_t>(std::llround(s[3] / ctx.grid().cell_volume()))};
}

double tail_energy(const OperatorContext& ctx, const SolutionBundle& bundle, const Quotient& q, const PairRegion& region) {
  const auto v = q.v.values();
  const auto u2 = bundle.u2.values();
  const auto& W = q.window.mask;
  return pair_sum(ctx, [&](std::size_t x, std::size_t y, double m) {
    if (!W[x] || !W[y] || !region.contains(x, y)) return 0.0;
    const double dv = v[x] - v[y];
    return dv * dv * u2[x] * u2[y] * m;
  });
}

EnergySplit energy_split(const OperatorContext& ctx, const SolutionBundle& bundle, const Quotient& q, const Cutoff& cut) {
  const auto v = q.v.values();
  const auto u2 = bundle.u2.values();
  const auto tau = cut.tau.values();
  const auto& W = q.window.mask;
  const auto s = pair_sums(ctx, 3, [&](std::size_t x, std::size_t y, double m, double* acc) {
    if (!W[x] || !W[y]) return;
    const double w = u2[x] * u2[y] * m;
    const double dv = v[x] - v[y];
    const double tx2 = tau[x] * tau[x];
    const double ty2 = tau[y] * tau[y];
    acc[0] += dv * (v[x] * tx2 - v[y] * ty2) * w;
    acc[1] += dv * v[y] * (tx2 - ty2) * w;
    acc[2] += tx2 * w;
  });
  return {s[0], s[1], s[2] * ctx.grid().cell_volume()};
}

double harnack_ratio(const Field& positive, double radius, const Window& window) {
  if (window.count == 0) throw DomainError("harnack window is empty");
  if (!(radius > 0.0)) throw ConfigError("harnack radius must be positive");
  const Grid& g = positive.grid();
  const int dim = g.dim();
  const double h0 = g.axis(0).h;
  const double h1 = dim == 2 ? g.axis(1).h : 1.0;
  const auto m0 = static_cast<std::ptrdiff_t>(std::floor(radius / h0 + 1e-9));
  const auto m1 = dim == 2 ? static_cast<std::ptrdiff_t>(std::floor(radius / h1 + 1e-9)) : 0;
  std::vector<std::array<std::ptrdiff_t, 2>> ball;
  for (std::ptrdiff_t i = -m0; i <= m0; ++i)
    for (std::ptrdiff_t j = -m1; j <= m1; ++j)
      if (std::hypot(i * h0, dim == 2 ? j * h1 : 0.0) <= radius * (1.0 + 1e-12)) ball.push_back({i, j});

  const auto val = positive.values();
  double worst = 1.0;
  for (std::size_t x = 0; x < val.size(); ++x) {
    if (!window.contains(x)) continue;
    const auto mi = g.multi_index(x);
    double hi = 0.0, lo = INFINITY;
    for (const auto& d : ball) {
      const std::ptrdiff_t j0 = static_cast<std::ptrdiff_t>(mi[0]) + d[0];
      const std::ptrdiff_t j1 = static_cast<std::ptrdiff_t>(mi[1]) + d[1];
      if (g.axis(0).outside(j0) || (dim == 2 && g.axis(1).outside(j1))) continue;
      const std::size_t y = dim == 1 ? g.axis(0).resolve(j0) : g.index(g.axis(0).resolve(j0), g.axis(1).resolve(j1));
      if (!window.contains(y)) continue;
      hi = std::max(hi, val[y]);
      lo = std::min(lo, val[y]);
    }
    worst = std::max(worst, hi / lo);
  }
  return worst;
}

double harnack_ratio(const SolutionBundle& bundle, double radius, const Window& window) {
  return harnack_ratio(bundle.monotone_derivative(), radius, window);
}

namespace {

Direction direction_from(std::span<const double> v, std::span<const double> w, const std::vector<std::size_t>& idx) {
  std::vector<double> a(idx.size()), b(idx.size());
  for (std::size_t k = 0; k < idx.size(); ++k) {
    a[k] = w[idx[k]] * v[idx[k]];
    b[k] = w[idx[k]];
  }
  const double W = pairwise_sum(b);
  if (!(W > 0.0)) throw DomainError("direction fit needs positive weights on the window");
  Direction d;
  d.a = pairwise_sum(a) / W;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const double e = v[idx[k]] - d.a;
    a[k] = w[idx[k]] * e * e;
  }
  d.v_stddev = std::sqrt(pairwise_sum(a) / W);
  const double n = std::hypot(d.a, 1.0);
  d.omega = {d.a / n, 1.0 / n};
  return d;
}

}  // namespace

Direction estimate_direction(const Field& v, const Field& u2, const Window& window) {
  if (window.count == 0) throw DomainError("direction window is empty");
  std::vector<std::size_t> idx;
  idx.reserve(window.count);
  for (std::size_t i = 0; i < window.mask.size(); ++i)
    if (window.contains(i)) idx.push_back(i);
  return direction_from(v.values(), u2.values(), idx);
}

std::vector<Direction> estimate_direction(const Field& v, const Field& u2, const Window& window, const Components& c) {
  std::vector<std::vector<std::size_t>> groups(static_cast<std::size_t>(c.count));
  for (std::size_t i = 0; i < window.mask.size(); ++i)
    if (window.contains(i) && c.label[i] >= 0) groups[static_cast<std::size_t>(c.label[i])].push_back(i);
  std::vector<Direction> out;
  for (const auto& g : groups) out.push_back(direction_from(v.values(), u2.values(), g));
  return out;
}

double planarity_error(const Field& u, std::array<double, 2> omega, const Window& window) {
  const double len = std::hypot(omega[0], omega[1]);
  if (std::abs(len - 1.0) > 1e-12) throw ConfigError("omega must be a unit vector");
  if (window.count == 0) throw DomainError("planarity window is empty");
  const Grid& g = u.grid();
  double hb = g.axis(0).h;
  if (g.dim() == 2) hb = std::min(hb, g.axis(1).h);

  std::vector<std::size_t> idx;
  std::vector<double> s;
  double smin = INFINITY, smax = -INFINITY;
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (!window.contains(i)) continue;
    const auto p = g.point(i);
    const double si = omega[0] * p[0] + omega[1] * p[1];
    idx.push_back(i);
    s.push_back(si);
    smin = std::min(smin, si);
    smax = std::max(smax, si);
  }
  // bins centred on multiples of hb from smin, so lattice-aligned s values never straddle an edge
  const auto nb = static_cast<std::size_t>(std::floor((smax - smin) / hb + 0.5)) + 1;
  std::vector<double> ssum(nb, 0.0), usum(nb, 0.0);
  std::vector<std::size_t> cnt(nb, 0);
  std::vector<std::size_t> bin(idx.size());
  for (std::size_t k = 0; k < idx.size(); ++k) {
    bin[k] = std::min(nb - 1, static_cast<std::size_t>(std::floor((s[k] - smin) / hb + 0.5)));
    ssum[bin[k]] += s[k];
    usum[bin[k]] += u[idx[k]];
    ++cnt[bin[k]];
  }
  std::vector<double> bs, bu;
  for (std::size_t b = 0; b < nb; ++b)
    if (cnt[b]) {
      bs.push_back(ssum[b] / static_cast<double>(cnt[b]));
      bu.push_back(usum[b] / static_cast<double>(cnt[b]));
    }
  auto fit = [&](double x) {
    if (bs.size() == 1 || x <= bs.front()) return bu.front();
    if (x >= bs.back()) return bu.back();
    const auto it = std::upper_bound(bs.begin(), bs.end(), x);
    const std::size_t r = static_cast<std::size_t>(it - bs.begin());
    const std::size_t l = r - 1;
    const double t = (x - bs[l]) / (bs[r] - bs[l]);
    return (1.0 - t) * bu[l] + t * bu[r];
  };
  double worst = 0.0;
  for (std::size_t k = 0; k < idx.size(); ++k) worst = std::max(worst, std::abs(u[idx[k]] - fit(s[k])));
  return worst;
}

double stability_residual(const OperatorContext& ctx, const Nonlinearity& f, const SolutionBundle& bundle,
                          const Field& psi, const Window& window) {
  if (!(psi.grid() == ctx.grid())) throw ConfigError("psi does not live on the operator grid");
  for (std::size_t i = 0; i < psi.size(); ++i)
    if (window.contains(i) && !(psi[i] > 0.0))
      throw DomainError("psi is not positive on the window (index " + std::to_string(i) + ")");
  const auto free = interior_mask(ctx.grid(), bundle.frozen_band);
  const auto Lpsi = apply_L(ctx, psi.values());
  double worst = 0.0, norm = 0.0;
  for (std::size_t i = 0; i < psi.size(); ++i) {
    if (!free[i]) continue;
    worst = std::max(worst, std::abs(Lpsi[i] - f.deriv(bundle.u[i]) * psi[i]));
    norm = std::max(norm, std::abs(psi[i]));
  }
  return worst / norm;
}

std::string RigidityReport::csv_header() {
  return "R,J1,J2,cs_factor_a,cs_factor_b,cs_holds,identity,cross,energy_scale,slack,kappa_measured,chain_holds,"
         "region_pair_count,window_pair_count,tail_energy,cutoff_grad";
}

std::string RigidityReport::csv_row() const {
  std::ostringstream o;
  o << num(R) << ',' << num(J1) << ',' << num(J2) << ',' << num(cs_factor_a) << ',' << num(cs_factor_b) << ','
    << (cs_holds ? 1 : 0) << ',' << num(identity) << ',' << num(cross) << ',' << num(energy_scale) << ','
    << num(slack) << ',' << num(kappa_measured) << ',' << (chain_holds ? 1 : 0) << ',' << region_pair_count << ','
    << window_pair_count << ',' << num(tail_energy) << ',' << num(cutoff_grad);
  return o.str();
}

std::string VerifyResult::to_text() const {
  std::ostringstream o;
  auto flag = [](bool b) { return b ? "true" : "false"; };
  o << "residual_inf=" << num(residual_inf) << '\n'
    << "window_points=" << window_points << '\n'
    << "window_fraction=" << num(window_fraction) << '\n'
    << "components=" << components << '\n'
    << "a=" << num(direction.a) << '\n'
    << "v_stddev=" << num(direction.v_stddev) << '\n'
    << "omega=" << num(direction.omega[0]) << ',' << num(direction.omega[1]) << '\n';
  for (std::size_t c = 0; c < component_directions.size(); ++c)
    o << "component." << c << ".a=" << num(component_directions[c].a) << '\n'
      << "component." << c << ".v_stddev=" << num(component_directions[c].v_stddev) << '\n';
  o << "harnack_C=" << num(harnack_C) << '\n'
    << "planarity_error_inf=" << num(planarity_error_inf) << '\n'
    << "stability_residual=" << num(stability_residual) << '\n'
    << "kappa=" << num(kappa) << '\n'
    << "region_growth_C=" << num(region_growth_C) << '\n'
    << "max_count_ratio=" << num(max_count_ratio) << '\n'
    << "tail_decreasing=" << flag(tail_decreasing) << '\n'
    << "cs_all=" << flag(cs_all) << '\n'
    << "chain_all=" << flag(chain_all) << '\n'
    << "planar=" << flag(planar) << '\n';
  for (const auto& r : rows) {
    const std::string p = "R." + num(r.R) + '.';
    o << p << "J1=" << num(r.J1) << '\n'
      << p << "J2=" << num(r.J2) << '\n'
      << p << "cs_factor_a=" << num(r.cs_factor_a) << '\n'
      << p << "cs_factor_b=" << num(r.cs_factor_b) << '\n'
      << p << "tail_energy=" << num(r.tail_energy) << '\n'
      << p << "region_pair_count=" << r.region_pair_count << '\n'
      << p << "kappa_measured=" << num(r.kappa_measured) << '\n';
  }
  return o.str();
}

std::string VerifyResult::to_csv() const {
  std::string out = RigidityReport::csv_header() + '\n';
  for (const auto& r : rows) out += r.csv_row() + '\n';
  return out;
}

VerifyResult verify_energy_chain(const OperatorContext& ctx, const Nonlinearity& f, const SolutionBundle& bundle,
                                 const VerifyOptions& opts) {
  require_2d(bundle);
  if (!(bundle.u.grid() == ctx.grid())) throw ConfigError("bundle does not live on the operator grid");
  if (opts.R_list.empty()) throw ConfigError("R_list is empty");
  if (!std::is_sorted(opts.R_list.begin(), opts.R_list.end())) throw ConfigError("R_list must be ascending");
  if (!(opts.kappa > 0.0)) throw ConfigError("kappa must be positive");

  VerifyResult res;
  res.kappa = opts.kappa;
  res.residual_inf = residual_inf(ctx, f, bundle.u, bundle.frozen_band);
  const Quotient q = compute_quotient(bundle, opts.eps_floor);
  res.window_points = q.window.count;
  res.window_fraction = q.window.fraction;
  const Components comp = window_components(ctx, q.window);
  res.components = comp.count;
  res.direction = estimate_direction(q.v, bundle.u2, q.window);
  res.component_directions = estimate_direction(q.v, bundle.u2, q.window, comp);
  const double radius = opts.harnack_radius > 0.0 ? opts.harnack_radius : ctx.kernel().support_radius();
  res.harnack_C = harnack_ratio(bundle.u2, radius, q.window);
  res.planarity_error_inf = planarity_error(bundle.u, res.direction.omega, q.window);
  res.stability_residual = stability_residual(ctx, f, bundle, bundle.u2, q.window);

  res.cs_all = true;
  res.chain_all = true;
  for (double R : opts.R_list) {
    RigidityReport r;
    r.R = R;
    const Cutoff cut = build_cutoff(ctx.grid(), R);
    const PairRegion region(ctx.grid(), R);
    r.cutoff_grad = cut.measured_grad;
    r.J1 = compute_J1(ctx, bundle, q, cut);
    const J2Terms t = compute_J2(ctx, bundle, q, cut, region);
    r.J2 = t.J2;
    r.cs_factor_a = t.cs_a;
    r.cs_factor_b = t.cs_b;
    r.window_pair_count = t.pairs;
    r.cs_holds = r.J2 * r.J2 <= r.cs_factor_a * r.cs_factor_b * (1.0 + 1e-12);
    const EnergySplit s = energy_split(ctx, bundle, q, cut);
    r.identity = s.identity;
    r.cross = s.cross;
    r.energy_scale = s.scale;
    r.slack = opts.kappa * res.residual_inf * s.scale;
    const double excess = std::max(0.0, r.J1 - r.J2);
    const double denom = res.residual_inf * s.scale;
    r.kappa_measured = excess == 0.0 ? 0.0 : (denom > 0.0 ? excess / denom : INFINITY);
    r.chain_holds = r.J1 <= r.J2 + r.slack;
    r.region_pair_count = region_pair_count(ctx, region);
    r.tail_energy = tail_energy(ctx, bundle, q, region);
    res.cs_all = res.cs_all && r.cs_holds;
    res.chain_all = res.chain_all && r.chain_holds;
    res.region_growth_C = std::max(res.region_growth_C, static_cast<double>(r.region_pair_count) / (R * R));
    res.rows.push_back(r);
  }
  res.tail_decreasing = res.rows.size() >= 2;
  for (std::size_t k = 1; k < res.rows.size(); ++k) {
    const auto& a = res.rows[k - 1];
    const auto& b = res.rows[k];
    if (!(b.tail_energy < a.tail_energy)) res.tail_decreasing = false;
    if (a.region_pair_count > 0) {
      const double ratio = static_cast<double>(b.region_pair_count) / static_cast<double>(a.region_pair_count) *
                           4.0 * (a.R / b.R) * (a.R / b.R);
      res.max_count_ratio = std::max(res.max_count_ratio, ratio);
    }
  }
  res.planar = res.planarity_error_inf <= opts.planarity_threshold;
  return res;
}

}  // namespace nlsym
