#include "nlsym/operator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

#include "detail/fft.hpp"
#include "nlsym/error.hpp"
#include "nlsym/parallel.hpp"

namespace nlsym {

struct OperatorContext::Spectral {
  std::vector<std::size_t> shape;
  detail::Spectrum khat;
};

namespace {

// 1D grids are handled as a single row: the row axis is a dummy of length 1.
struct Layout {
  Axis rows;
  Axis cols;
};

Layout layout(const Grid& g) {
  if (g.dim() == 1) return {Axis{1, 1.0, 0.0, Boundary::periodic}, g.axis(0)};
  return {g.axis(0), g.axis(1)};
}

struct Offset {
  std::ptrdiff_t d0;
  std::ptrdiff_t d1;
  double mass;
};

std::vector<Offset> offsets(const DiscreteKernel& k) {
  std::vector<Offset> out;
  out.reserve(k.taps().size());
  for (const auto& t : k.taps()) {
    if (k.dim() == 1)
      out.push_back({0, t.offset[0], k.mass(t)});
    else
      out.push_back({t.offset[0], t.offset[1], k.mass(t)});
  }
  return out;
}

void check_field(const OperatorContext& ctx, std::size_t n) {
  if (n != ctx.grid().size()) throw ConfigError("field does not live on the operator grid");
}

std::vector<double> apply_direct(const OperatorContext& ctx, std::span<const double> u) {
  const Layout lay = layout(ctx.grid());
  const auto taps = offsets(ctx.kernel());
  const std::size_t n0 = lay.rows.n;
  const std::size_t n1 = lay.cols.n;
  std::vector<double> out(u.size(), 0.0);
  parallel_for(n0, [&](std::size_t b, std::size_t e) {
    for (std::size_t i0 = b; i0 < e; ++i0) {
      double* row = out.data() + i0 * n1;
      const double* ux = u.data() + i0 * n1;
      for (const auto& t : taps) {
        const std::size_t j0 = lay.rows.resolve(static_cast<std::ptrdiff_t>(i0) - t.d0);
        const double* uy = u.data() + j0 * n1;
        // fast path for the columns whose source index needs no boundary rule
        const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, t.d1);
        const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(n1), static_cast<std::ptrdiff_t>(n1) + t.d1);
        for (std::ptrdiff_t i1 = 0; i1 < static_cast<std::ptrdiff_t>(n1); ++i1) {
          const std::size_t j1 = (i1 >= lo && i1 < hi) ? static_cast<std::size_t>(i1 - t.d1) : lay.cols.resolve(i1 - t.d1);
          row[i1] += t.mass * (ux[i1] - uy[j1]);
        }
      }
    }
  });
  return out;
}

std::shared_ptr<const OperatorContext::Spectral> build_spectral(const DiscreteKernel& k, const Grid& g) {
  auto s = std::make_shared<OperatorContext::Spectral>();
  for (const auto& ax : g.axes()) s->shape.push_back(ax.n);
  const Layout lay = layout(g);
  std::vector<double> kern(g.size(), 0.0);
  for (const auto& t : offsets(k)) {
    const std::size_t j0 = lay.rows.resolve(t.d0);
    const std::size_t j1 = lay.cols.resolve(t.d1);
    kern[j0 * lay.cols.n + j1] += t.mass;
  }
  s->khat = detail::rfft(kern, s->shape);
  return s;
}

std::vector<double> apply_fft(const OperatorContext::Spectral& s, std::span<const double> u) {
  // Working with u - u[0] makes constant fields map to an exact zero.
  const double ref = u[0];
  std::vector<double> w(u.begin(), u.end());
  for (double& x : w) x -= ref;
  auto spec = detail::rfft(w, s.shape);
  for (std::size_t i = 0; i < spec.size(); ++i) spec[i] *= s.khat[i];
  const auto conv = detail::irfft(spec, s.shape);
  for (std::size_t i = 0; i < w.size(); ++i) w[i] -= conv[i];
  return w;
}

}  // namespace

std::string_view to_string(OperatorMethod m) { return m == OperatorMethod::fft ? "fft" : "direct"; }

OperatorContext::OperatorContext(DiscreteKernel kernel, Grid grid, OperatorMethod method)
    : kernel_(std::move(kernel)), grid_(std::move(grid)), method_(method) {
  if (kernel_.dim() != grid_.dim()) throw ConfigError("kernel and grid dimensions differ");
  for (int a = 0; a < grid_.dim(); ++a) {
    const double h = grid_.axis(a).h;
    if (std::abs(kernel_.spacing()[static_cast<std::size_t>(a)] - h) > 1e-12 * h)
      throw ConfigError("kernel spacing does not match grid spacing on axis " + std::to_string(a));
  }
  if (method_ == OperatorMethod::fft) {
    if (!grid_.fully_periodic()) throw ConfigError("fft method requires a fully periodic grid");
    spectral_ = build_spectral(kernel_, grid_);
  }
}

std::vector<double> apply_L(const OperatorContext& ctx, std::span<const double> u) {
  check_field(ctx, u.size());
  if (ctx.method_ == OperatorMethod::fft) return apply_fft(*ctx.spectral_, u);
  return apply_direct(ctx, u);
}

Field apply_L(const OperatorContext& ctx, const Field& u) {
  if (!(u.grid() == ctx.grid())) throw ConfigError("field does not live on the operator grid");
  return Field(ctx.grid(), apply_L(ctx, u.values()));
}

double pair_sum(const OperatorContext& ctx, const std::function<double(std::size_t, std::size_t, double)>& term) {
  const Layout lay = layout(ctx.grid());
  const auto taps = offsets(ctx.kernel());
  const std::size_t n1 = lay.cols.n;
  const double vol = ctx.grid().cell_volume();
  const double total = deterministic_sum(lay.rows.n, [&](std::size_t i0) {
    double acc = 0.0;
    for (const auto& t : taps) {
      const std::ptrdiff_t s0 = static_cast<std::ptrdiff_t>(i0) - t.d0;
      if (lay.rows.outside(s0)) continue;
      const std::size_t j0 = lay.rows.resolve(s0);
      for (std::size_t i1 = 0; i1 < n1; ++i1) {
        const std::ptrdiff_t s1 = static_cast<std::ptrdiff_t>(i1) - t.d1;
        if (lay.cols.outside(s1)) continue;
        acc += term(i0 * n1 + i1, j0 * n1 + lay.cols.resolve(s1), t.mass);
      }
    }
    return acc;
  });
  return total * vol;
}

std::vector<double> pair_sums(const OperatorContext& ctx, std::size_t k,
                              const std::function<void(std::size_t, std::size_t, double, double*)>& term) {
  const Layout lay = layout(ctx.grid());
  const auto taps = offsets(ctx.kernel());
  const std::size_t n0 = lay.rows.n;
  const std::size_t n1 = lay.cols.n;
  std::vector<double> partial(n0 * k, 0.0);
  parallel_for(n0, [&](std::size_t b, std::size_t e) {
    for (std::size_t i0 = b; i0 < e; ++i0) {
      double* acc = partial.data() + i0 * k;
      for (const auto& t : taps) {
        const std::ptrdiff_t s0 = static_cast<std::ptrdiff_t>(i0) - t.d0;
        if (lay.rows.outside(s0)) continue;
        const std::size_t j0 = lay.rows.resolve(s0);
        for (std::size_t i1 = 0; i1 < n1; ++i1) {
          const std::ptrdiff_t s1 = static_cast<std::ptrdiff_t>(i1) - t.d1;
          if (lay.cols.outside(s1)) continue;
          term(i0 * n1 + i1, j0 * n1 + lay.cols.resolve(s1), t.mass, acc);
        }
      }
    }
  });
  const double vol = ctx.grid().cell_volume();
  std::vector<double> out(k);
  std::vector<double> column(n0);
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t r = 0; r < n0; ++r) column[r] = partial[r * k + c];
    out[c] = pairwise_sum(column) * vol;
  }
  return out;
}

void for_each_pair(const OperatorContext& ctx, const std::function<void(std::size_t, std::size_t, double)>& visit) {
  const Layout lay = layout(ctx.grid());
  const auto taps = offsets(ctx.kernel());
  const std::size_t n1 = lay.cols.n;
  for (std::size_t i0 = 0; i0 < lay.rows.n; ++i0)
    for (const auto& t : taps) {
      const std::ptrdiff_t s0 = static_cast<std::ptrdiff_t>(i0) - t.d0;
      if (lay.rows.outside(s0)) continue;
      const std::size_t j0 = lay.rows.resolve(s0);
      for (std::size_t i1 = 0; i1 < n1; ++i1) {
        const std::ptrdiff_t s1 = static_cast<std::ptrdiff_t>(i1) - t.d1;
        if (lay.cols.outside(s1)) continue;
        visit(i0 * n1 + i1, j0 * n1 + lay.cols.resolve(s1), t.mass);
      }
    }
}

double dirichlet_form(const OperatorContext& ctx, const Field& f, const Field& g, const PairMask& mask) {
  check_field(ctx, f.size());
  check_field(ctx, g.size());
  const auto fv = f.values();
  const auto gv = g.values();
  return pair_sum(ctx, [&](std::size_t x, std::size_t y, double m) {
    if (mask && !mask(x, y)) return 0.0;
    return (fv[x] - fv[y]) * (gv[x] - gv[y]) * m;
  });
}

std::string R1Report::to_text() const {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%.17g", max_rel_discrepancy);
  std::ostringstream o;
  o << "trials=" << trials << '\n'
    << "max_rel_discrepancy=" << buf << '\n'
    << "regime=" << (boundary_remainder_regime ? "boundary_remainder" : "periodic") << '\n'
    << "status=" << (passed ? "pass" : "fail") << '\n';
  return o.str();
}

R1Report check_R1(const OperatorContext& ctx, std::size_t trials, std::uint64_t seed) {
  R1Report rep;
  rep.trials = trials;
  rep.boundary_remainder_regime = !ctx.grid().fully_periodic();
  const auto keep = interior_mask(ctx.grid(), ctx.kernel().support_radius());
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  const std::size_t n = ctx.grid().size();
  const double vol = ctx.grid().cell_volume();
  for (std::size_t t = 0; t < trials; ++t) {
    std::vector<double> f(n), g(n);
    for (auto& x : f) x = dist(rng);
    for (std::size_t i = 0; i < n; ++i) {
      g[i] = dist(rng);
      if (rep.boundary_remainder_regime && !keep[i]) g[i] = 0.0;
    }
    const Field F(ctx.grid(), f);
    const Field G(ctx.grid(), g);
    const double lhs = dirichlet_form(ctx, F, G);
    const auto Lf = apply_L(ctx, f);
    std::vector<double> prod(n);
    for (std::size_t i = 0; i < n; ++i) prod[i] = Lf[i] * g[i];
    const double rhs = 2.0 * pairwise_sum(prod) * vol;
    const double scale = std::max({std::abs(lhs), std::abs(rhs), 1e-300});
    rep.max_rel_discrepancy = std::max(rep.max_rel_discrepancy, std::abs(lhs - rhs) / scale);
  }
  rep.passed = rep.max_rel_discrepancy <= 1e-10;
  return rep;
}

double check_commutation(const OperatorContext& ctx, const Field& u, const std::vector<DerivativeScheme>& schemes,
                         double band) {
  if (static_cast<int>(schemes.size()) != ctx.grid().dim()) throw ConfigError("need one derivative scheme per axis");
  const double norm = u.max_abs();
  if (norm == 0.0) return 0.0;
  const auto keep = interior_mask(ctx.grid(), band);
  const auto Lu = apply_L(ctx, u.values());
  double worst = 0.0;
  for (int a = 0; a < ctx.grid().dim(); ++a) {
    const auto s = schemes[static_cast<std::size_t>(a)];
    const auto dLu = differentiate(ctx.grid(), Lu, a, s);
    const auto Ldu = apply_L(ctx, differentiate(ctx.grid(), u.values(), a, s));
    for (std::size_t i = 0; i < dLu.size(); ++i)
      if (keep[i]) worst = std::max(worst, std::abs(dLu[i] - Ldu[i]));
  }
  return worst / norm;
}

double check_commutation(const OperatorContext& ctx, const Field& u, double band) {
  std::vector<DerivativeScheme> schemes;
  for (int a = 0; a < ctx.grid().dim(); ++a) schemes.push_back(default_scheme(ctx.grid(), a));
  return check_commutation(ctx, u, schemes, band);
}

}  // namespace nlsym
