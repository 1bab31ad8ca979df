#include "nlsym/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <numbers>
#include <numeric>
#include <sstream>

#include "nlsym/error.hpp"
#include "nlsym/field_io.hpp"
#include "nlsym/parallel.hpp"

namespace nlsym {
namespace {

double max_abs_masked(std::span<const double> r, const std::vector<char>& free) {
  double m = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i)
    if (free[i]) m = std::max(m, std::abs(r[i]));
  return m;
}

double dot(std::span<const double> a, std::span<const double> b) {
  std::vector<double> p(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) p[i] = a[i] * b[i];
  return pairwise_sum(p);
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

bool symmetric_about_zero(const Axis& ax) {
  const double centre = ax.origin + 0.5 * static_cast<double>(ax.n - 1) * ax.h;
  return std::abs(centre) <= 1e-9 * ax.h;
}

std::string scheme_label(const std::vector<DerivativeScheme>& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += '/';
    out += std::string(to_string(s[i]));
  }
  return out;
}

std::vector<DerivativeScheme> resolve_schemes(const Grid& g, const std::vector<DerivativeScheme>& s) {
  if (s.empty()) {
    std::vector<DerivativeScheme> out;
    for (int a = 0; a < g.dim(); ++a) out.push_back(default_scheme(g, a));
    return out;
  }
  if (static_cast<int>(s.size()) != g.dim()) throw ConfigError("need one derivative scheme per axis");
  return s;
}

struct GmresResult {
  std::vector<double> x;
  double rel_residual = 1.0;
  int iterations = 0;
  bool converged = false;
};

// Restarted GMRES(m) with modified Gram-Schmidt and Givens rotations, x0 = 0.
GmresResult gmres(const std::function<std::vector<double>(const std::vector<double>&)>& A, const std::vector<double>& b,
                  double rtol, int restart, int max_iter) {
  const std::size_t n = b.size();
  GmresResult res;
  res.x.assign(n, 0.0);
  const double bnorm = norm2(b);
  if (bnorm == 0.0) {
    res.rel_residual = 0.0;
    res.converged = true;
    return res;
  }
  std::vector<double> r = b;
  double beta = bnorm;
  while (res.iterations < max_iter) {
    const int m = restart;
    std::vector<std::vector<double>> V;
    V.reserve(static_cast<std::size_t>(m) + 1);
    std::vector<std::vector<double>> H(static_cast<std::size_t>(m) + 1, std::vector<double>(static_cast<std::size_t>(m), 0.0));
    std::vector<double> cs(static_cast<std::size_t>(m)), sn(static_cast<std::size_t>(m)), g(static_cast<std::size_t>(m) + 1, 0.0);
    V.push_back(r);
    for (double& x : V[0]) x /= beta;
    g[0] = beta;
    int k = 0;
    for (; k < m && res.iterations < max_iter; ++k) {
      ++res.iterations;
      auto w = A(V[static_cast<std::size_t>(k)]);
      for (int j = 0; j <= k; ++j) {
        const double hjk = dot(w, V[static_cast<std::size_t>(j)]);
        H[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)] = hjk;
        const auto& vj = V[static_cast<std::size_t>(j)];
        for (std::size_t i = 0; i < n; ++i) w[i] -= hjk * vj[i];
      }
      const double hn = norm2(w);
      H[static_cast<std::size_t>(k) + 1][static_cast<std::size_t>(k)] = hn;
      for (int j = 0; j < k; ++j) {
        const auto uj = static_cast<std::size_t>(j);
        const auto uk = static_cast<std::size_t>(k);
        const double t = cs[uj] * H[uj][uk] + sn[uj] * H[uj + 1][uk];
        H[uj + 1][uk] = -sn[uj] * H[uj][uk] + cs[uj] * H[uj + 1][uk];
        H[uj][uk] = t;
      }
      const auto uk = static_cast<std::size_t>(k);
      const double den = std::hypot(H[uk][uk], H[uk + 1][uk]);
      cs[uk] = den == 0.0 ? 1.0 : H[uk][uk] / den;
      sn[uk] = den == 0.0 ? 0.0 : H[uk + 1][uk] / den;
      H[uk][uk] = den;
      H[uk + 1][uk] = 0.0;
      g[uk + 1] = -sn[uk] * g[uk];
      g[uk] = cs[uk] * g[uk];
      res.rel_residual = std::abs(g[uk + 1]) / bnorm;
      if (hn > 0.0) {
        for (double& x : w) x /= hn;
      }
      V.push_back(std::move(w));
      if (res.rel_residual <= rtol || hn == 0.0) {
        ++k;
        break;
      }
    }
    // back substitution on the k x k triangle
    std::vector<double> y(static_cast<std::size_t>(k), 0.0);
    for (int i = k - 1; i >= 0; --i) {
      const auto ui = static_cast<std::size_t>(i);
      double s = g[ui];
      for (int j = i + 1; j < k; ++j) s -= H[ui][static_cast<std::size_t>(j)] * y[static_cast<std::size_t>(j)];
      y[ui] = H[ui][ui] == 0.0 ? 0.0 : s / H[ui][ui];
    }
    for (int j = 0; j < k; ++j) {
      const auto& vj = V[static_cast<std::size_t>(j)];
      for (std::size_t i = 0; i < n; ++i) res.x[i] += y[static_cast<std::size_t>(j)] * vj[i];
    }
    if (res.rel_residual <= rtol) {
      res.converged = true;
      break;
    }
    // true residual for the restart
    const auto Ax = A(res.x);
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - Ax[i];
    beta = norm2(r);
    res.rel_residual = beta / bnorm;
    if (res.rel_residual <= rtol) {
      res.converged = true;
      break;
    }
  }
  return res;
}

std::vector<double> sample_profile(const SolutionBundle& profile, const Field& which, std::span<const double> s) {
  const Axis& ax = profile.u.grid().axis(0);
  std::vector<double> out(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double t = (s[i] - ax.origin) / ax.h;
    if (t <= 0.0) {
      out[i] = which[0];
      continue;
    }
    if (t >= static_cast<double>(ax.n - 1)) {
      out[i] = which[ax.n - 1];
      continue;
    }
    auto k = static_cast<std::size_t>(std::floor(t + 1e-9));
    double frac = t - static_cast<double>(k);
    if (frac < 1e-9) frac = 0.0;
    if (k + 1 >= ax.n) {
      k = ax.n - 1;
      frac = 0.0;
    }
    out[i] = frac == 0.0 ? which[k] : (1.0 - frac) * which[k] + frac * which[k + 1];
  }
  return out;
}

void require_profile(const SolutionBundle& profile) {
  if (profile.dim() != 1) throw ConfigError("expected a 1D profile bundle");
}

}  // namespace

bool symmetry_available(const Grid& grid) {
  const Axis& last = grid.axis(grid.dim() - 1);
  if (last.boundary != Boundary::clamp || !symmetric_about_zero(last)) return false;
  if (grid.dim() == 1) return true;
  const Axis& ax0 = grid.axis(0);
  return ax0.boundary == Boundary::periodic && ax0.n % 2 == 0;
}

namespace {

std::size_t mirror(const Grid& g, std::size_t i) {
  if (g.dim() == 1) return g.size() - 1 - i;
  const auto mi = g.multi_index(i);
  const std::size_t n0 = g.axis(0).n;
  const std::size_t n1 = g.axis(1).n;
  return g.index((mi[0] + n0 / 2) % n0, n1 - 1 - mi[1]);
}

}  // namespace

void symmetry_project(const Grid& grid, std::vector<double>& x) {
  if (!symmetry_available(grid)) throw ConfigError("grid does not carry the reflection symmetry");
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = 0.5 * (x[i] - x[mirror(grid, i)]);
  x = std::move(y);
}

double symmetry_defect(const Grid& grid, std::span<const double> x) {
  if (!symmetry_available(grid)) return INFINITY;
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) d = std::max(d, 0.5 * std::abs(x[i] + x[mirror(grid, i)]));
  return d;
}

std::vector<double> equation_residual(const OperatorContext& ctx, const Nonlinearity& f, std::span<const double> u) {
  auto r = apply_L(ctx, u);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] -= f(u[i]);
  return r;
}

double residual_inf(const OperatorContext& ctx, const Nonlinearity& f, const Field& u, double frozen_band) {
  const auto r = equation_residual(ctx, f, u.values());
  return max_abs_masked(r, interior_mask(ctx.grid(), frozen_band));
}

SolutionBundle make_bundle(const OperatorContext& ctx, const Nonlinearity& f, Field u, Field u1, Field u2,
                           double frozen_band, std::string derivative) {
  SolutionBundle b;
  b.residual_inf = residual_inf(ctx, f, u, frozen_band);
  b.frozen_band = frozen_band;
  b.derivative = std::move(derivative);
  b.u = std::move(u);
  b.u1 = std::move(u1);
  b.u2 = std::move(u2);
  const auto free = interior_mask(b.u.grid(), frozen_band);
  const auto d = b.monotone_derivative().values();
  double lo = INFINITY, hi = -INFINITY;
  for (std::size_t i = 0; i < d.size(); ++i)
    if (free[i]) {
      lo = std::min(lo, d[i]);
      hi = std::max(hi, d[i]);
    }
  b.min_derivative = lo;
  b.max_derivative = hi;
  b.monotone = hi > 0.0 && lo >= -kMonotoneTolerance * hi;
  return b;
}

SolutionBundle make_bundle(const OperatorContext& ctx, const Nonlinearity& f, Field u, const BundleOptions& opts) {
  const Grid& g = u.grid();
  const auto schemes = resolve_schemes(g, opts.schemes);
  Field u1(g, differentiate(g, u.values(), 0, schemes[0]));
  Field u2 = g.dim() == 2 ? Field(g, differentiate(g, u.values(), 1, schemes[1])) : Field();
  return make_bundle(ctx, f, std::move(u), std::move(u1), std::move(u2), opts.frozen_band, scheme_label(schemes));
}

SolutionBundle newton_polish(const OperatorContext& ctx, const Nonlinearity& f, const SolutionBundle& in,
                             const NewtonOptions& opts, const BundleOptions& bopts) {
  BundleOptions bo = bopts;
  if (bo.frozen_band == 0.0) bo.frozen_band = in.frozen_band;
  const Grid& g = ctx.grid();
  const auto free = interior_mask(g, bo.frozen_band);
  const bool sym = opts.symmetric;
  if (sym && !symmetry_available(g)) throw ConfigError("symmetric Newton requested on a grid without the symmetry");

  std::vector<double> u(in.u.values().begin(), in.u.values().end());
  auto residual = [&](const std::vector<double>& w) {
    auto r = equation_residual(ctx, f, w);
    for (std::size_t i = 0; i < r.size(); ++i)
      if (!free[i]) r[i] = 0.0;
    if (sym) symmetry_project(g, r);
    return r;
  };
  auto fail = [&](const std::string& why, std::vector<double> hist) {
    SolutionBundle out = in;
    out.fallback = true;
    out.history.insert(out.history.end(), hist.begin(), hist.end());
    out.warnings.push_back("newton fallback: " + why);
    return out;
  };

  auto r = residual(u);
  double res = max_abs_masked(r, free);
  std::vector<double> hist{res};
  if (res > opts.threshold) return fail("start residual above threshold", hist);

  int accepted = 0;
  std::string stall;
  for (int step = 0; step < opts.max_steps && res > opts.tol; ++step) {
    std::vector<double> dfu(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) dfu[i] = f.deriv(u[i]);
    auto J = [&](const std::vector<double>& x) {
      auto y = apply_L(ctx, x);
      for (std::size_t i = 0; i < y.size(); ++i) y[i] = free[i] ? y[i] - dfu[i] * x[i] : 0.0;
      if (sym) symmetry_project(g, y);
      return y;
    };
    std::vector<double> rhs(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) rhs[i] = -r[i];
    const auto lin = gmres(J, rhs, opts.forcing, opts.gmres_restart, opts.gmres_max_iter);
    if (!lin.converged && lin.rel_residual > 0.5) {
      if (accepted == 0) return fail("linear solver stagnated", hist);
      stall = "linear solver stagnated";
      break;
    }
    double t = 1.0;
    bool ok = false;
    for (int ls = 0; ls < 12; ++ls, t *= 0.5) {
      std::vector<double> trial = u;
      for (std::size_t i = 0; i < u.size(); ++i)
        if (free[i]) trial[i] += t * lin.x[i];
      if (sym) symmetry_project(g, trial);
      auto rt = residual(trial);
      const double rs = max_abs_masked(rt, free);
      if (rs < res) {
        u = std::move(trial);
        r = std::move(rt);
        res = rs;
        ok = true;
        break;
      }
    }
    hist.push_back(res);
    if (!ok) {
      if (accepted == 0) return fail("line search failed", hist);
      stall = "line search failed";
      break;
    }
    ++accepted;
  }
  auto out = make_bundle(ctx, f, Field(g, std::move(u)), bo);
  out.history = in.history;
  out.history.insert(out.history.end(), hist.begin() + 1, hist.end());
  out.warnings = in.warnings;
  if (!stall.empty()) out.warnings.push_back("newton stopped early: " + stall);
  return out;
}

SolutionBundle solve_profile_1d(const DiscreteKernel& kernel, const Nonlinearity& f, const Grid& grid,
                                const ProfileOptions& opts) {
  if (grid.dim() != 1 || grid.axis(0).boundary != Boundary::clamp)
    throw ConfigError("solve_profile_1d needs a 1D clamp grid");
  if (!(opts.lambda > 0.0) || !(opts.tol > 0.0) || opts.max_iter < 1)
    throw ConfigError("profile solver options must be positive");
  if (std::abs(f(1.0)) > 1e-12 || std::abs(f(-1.0)) > 1e-12) throw ConfigError("nonlinearity must vanish at -1 and +1");
  const Axis& ax = grid.axis(0);
  const double half = 0.5 * static_cast<double>(ax.n - 1) * ax.h;
  if (half < 4.0 * kernel.support_radius()) throw ConfigError("profile domain too short for the kernel range");

  const OperatorContext ctx(kernel, grid);
  const bool sym = opts.odd_projection && f.is_odd() && symmetry_available(grid);
  std::vector<double> u(ax.n);
  for (std::size_t i = 0; i < ax.n; ++i) u[i] = std::tanh(ax.coord(static_cast<std::ptrdiff_t>(i)) / opts.width);
  if (sym) symmetry_project(grid, u);

  std::vector<double> hist;
  const double handoff = std::max(opts.handoff, opts.tol);
  double res = INFINITY;
  for (int it = 0; it < opts.max_iter; ++it) {
    auto r = equation_residual(ctx, f, u);
    res = 0.0;
    for (double x : r) res = std::max(res, std::abs(x));
    hist.push_back(res);
    if (res <= handoff) break;
    for (std::size_t i = 0; i < u.size(); ++i) u[i] -= opts.lambda * r[i];
    if (sym) symmetry_project(grid, u);
  }
  if (res > opts.newton.threshold) {
    throw SolverError("profile iteration did not reach the Newton threshold within " + std::to_string(opts.max_iter) +
                          " iterations (residual " + std::to_string(res) + ")",
                      hist);
  }

  BundleOptions bo;
  bo.schemes = {opts.scheme};
  auto b = make_bundle(ctx, f, Field(grid, u), bo);
  b.history = hist;
  if (res > opts.tol || opts.newton.tol < opts.tol) {
    NewtonOptions no = opts.newton;
    no.symmetric = sym;
    no.tol = std::min(no.tol, opts.tol);
    b = newton_polish(ctx, f, b, no, bo);
  }
  if (!(b.residual_inf <= opts.tol)) {
    throw SolverError("profile residual " + std::to_string(b.residual_inf) + " above tolerance", b.history);
  }
  const double lo_gap = std::abs(b.u[0] + 1.0);
  const double hi_gap = std::abs(b.u[ax.n - 1] - 1.0);
  if (std::max(lo_gap, hi_gap) > opts.tail_tol)
    b.warnings.push_back("profile tails further than tail_tol from -1/+1; enlarge the domain");
  return b;
}

double relax_stability_bound(const Nonlinearity& f) { return 2.0 / (2.0 + f.max_abs_deriv(-1.0, 1.0)); }

SolutionBundle relax_2d(const DiscreteKernel& kernel, const Nonlinearity& f, const Grid& grid, const Field& u0,
                        const RelaxOptions& opts) {
  if (grid.dim() != 2) throw ConfigError("relax_2d needs a 2D grid");
  if (!(u0.grid() == grid)) throw ConfigError("initial field does not live on the grid");
  const double bound = relax_stability_bound(f);
  const double dt = opts.dt > 0.0 ? opts.dt : 0.5 / (2.0 + f.max_abs_deriv(-1.0, 1.0));
  if (dt >= bound)
    throw ConfigError("dt = " + std::to_string(dt) + " is not below the stability bound " + std::to_string(bound));
  if (opts.dt < 0.0 || !(opts.tol > 0.0) || opts.max_steps < 0) throw ConfigError("relax options must be positive");
  if (u0.max_abs() > 1.0 + 1e-9) throw ConfigError("initial field leaves [-1, 1]");

  const OperatorContext ctx(kernel, grid);
  const auto free = interior_mask(grid, opts.frozen_band);
  const std::size_t n1 = grid.axis(1).n;
  std::vector<double> u(u0.values().begin(), u0.values().end());
  std::vector<std::string> warnings;

  auto forward_min = [&](const std::vector<double>& w) {
    double lo = INFINITY, hi = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (!free[i] || (i % n1) + 1 >= n1) continue;
      const double d = w[i + 1] - w[i];
      lo = std::min(lo, d);
      hi = std::max(hi, d);
    }
    return std::pair{lo, hi};
  };
  {
    const auto [lo, hi] = forward_min(u);
    if (lo < -kMonotoneTolerance * hi) warnings.push_back("initial field is not monotone in x2");
  }

  const double stop = opts.handoff > 0.0 ? std::max(opts.handoff, opts.tol) : opts.tol;
  std::vector<double> hist;
  bool lost = false;
  for (long step = 0;; ++step) {
    auto r = equation_residual(ctx, f, u);
    const double res = max_abs_masked(r, free);
    hist.push_back(res);
    if (res <= stop || step >= opts.max_steps) break;
    for (std::size_t i = 0; i < u.size(); ++i)
      if (free[i]) u[i] -= dt * r[i];
    if (!lost && step % 100 == 99) {
      const auto [lo, hi] = forward_min(u);
      if (lo < -kMonotoneTolerance * hi) {
        lost = true;
        warnings.push_back("monotonicity lost at step " + std::to_string(step + 1));
      }
    }
  }
  BundleOptions bo{opts.schemes, opts.frozen_band};
  auto b = make_bundle(ctx, f, Field(grid, std::move(u)), bo);
  b.history = std::move(hist);
  b.warnings = std::move(warnings);
  if (!b.monotone && !lost) b.warnings.push_back("final field is not monotone in x2");
  if (b.residual_inf > stop) b.warnings.push_back("relaxation stopped at max_steps above tolerance");
  return b;
}

std::array<int, 2> rational_slope(double a, int max_den) {
  if (!std::isfinite(a)) throw ConfigError("slope must be finite");
  for (int q = 1; q <= max_den; ++q) {
    const double p = std::round(a * q);
    if (std::abs(p) > 1e6) break;
    if (std::abs(p / q - a) <= 1e-12 * std::max(1.0, std::abs(a))) {
      const int pi = static_cast<int>(p);
      const int g = std::gcd(std::abs(pi), q);
      return {pi / g, q / g};
    }
  }
  throw ConfigError("slope " + std::to_string(a) + " is not a fraction with denominator <= " + std::to_string(max_den));
}

SolutionBundle manufacture_planar(const DiscreteKernel& kernel, const Nonlinearity& f, const Grid& grid, double a,
                                  const ProfileOptions& opts) {
  if (grid.dim() != 2 || kernel.dim() != 2) throw ConfigError("manufacture_planar needs a 2D grid and kernel");
  const auto [p, q] = rational_slope(a);
  const Axis& ax0 = grid.axis(0);
  const Axis& ax1 = grid.axis(1);
  if (p != 0 && ax0.boundary == Boundary::periodic)
    throw ConfigError("a tilted planar front is not periodic in x1; use a clamp x1 axis");
  if (p != 0 && std::abs(ax0.h - ax1.h) > 1e-12 * ax0.h) throw ConfigError("tilted fronts need equal spacings");

  const DiscreteKernel k1 = project_kernel(kernel, p, q);
  const double hs = k1.spacing()[0];
  const double norm = std::hypot(static_cast<double>(p), static_cast<double>(q));
  const double s_org = (p * ax0.origin + q * ax1.origin) / norm;
  const double c = s_org / hs;

  const long n0 = static_cast<long>(ax0.n), n1 = static_cast<long>(ax1.n);
  const long mmin = std::min(0L, p * (n0 - 1));
  const long mmax = std::max(0L, p * (n0 - 1)) + q * (n1 - 1);
  const long pad = static_cast<long>(std::ceil(k1.support_radius() / hs)) + 2;
  double lo = c + static_cast<double>(mmin - pad);
  double hi = c + static_cast<double>(mmax + pad);
  const double frac = c - std::floor(c);
  if (std::abs(frac) < 1e-9 || std::abs(frac - 1.0) < 1e-9 || std::abs(frac - 0.5) < 1e-9) {
    const double M = std::max(-lo, hi);
    lo = -M;
    hi = M;
  }
  const auto n = static_cast<std::size_t>(std::llround(hi - lo)) + 1;
  const Grid line = Grid::line(n, hs, lo * hs, Boundary::clamp);
  const auto profile = solve_profile_1d(k1, f, line, opts);

  const double w0 = p / norm, w1 = q / norm;
  const long shift = std::llround(c - lo);
  std::vector<double> u(grid.size()), u1(grid.size()), u2(grid.size());
  for (long i = 0; i < n0; ++i)
    for (long j = 0; j < n1; ++j) {
      const auto k = static_cast<std::size_t>(shift + p * i + q * j);
      const std::size_t idx = grid.index(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
      u[idx] = profile.u[k];
      u1[idx] = w0 * profile.u1[k];
      u2[idx] = w1 * profile.u1[k];
    }
  double band = 0.0;
  if (ax0.boundary == Boundary::clamp || ax1.boundary == Boundary::clamp) band = kernel.support_radius();
  const OperatorContext ctx(kernel, grid);
  auto b = make_bundle(ctx, f, Field(grid, std::move(u)), Field(grid, std::move(u1)), Field(grid, std::move(u2)), band,
                       "planar_chain_rule(" + profile.derivative + ")");
  b.history = profile.history;
  b.warnings = profile.warnings;
  return b;
}

std::string_view to_string(Envelope e) { return e == Envelope::sech ? "sech" : "slope"; }

Envelope envelope_from_string(std::string_view s) {
  if (s == "sech") return Envelope::sech;
  if (s == "slope") return Envelope::slope;
  throw ConfigError("unknown envelope '" + std::string(s) + "'");
}

Field perturbed_initial(const SolutionBundle& profile, const Grid& grid, double amp, Envelope env) {
  require_profile(profile);
  if (grid.dim() != 2 || grid.axis(0).boundary != Boundary::periodic)
    throw ConfigError("perturbed initial data needs a 2D grid with periodic x1");
  const Axis& ax0 = grid.axis(0);
  const Axis& ax1 = grid.axis(1);
  const double L = static_cast<double>(ax0.n) * ax0.h;
  std::vector<double> s(ax1.n);
  for (std::size_t j = 0; j < ax1.n; ++j) s[j] = ax1.coord(static_cast<std::ptrdiff_t>(j));
  const auto P = sample_profile(profile, profile.u, s);
  const auto dP = sample_profile(profile, profile.u1, s);
  const double dmax = profile.u1.max();
  std::vector<double> u(grid.size());
  for (std::size_t i = 0; i < ax0.n; ++i) {
    const double wave = amp * std::sin(2.0 * std::numbers::pi * ax0.coord(static_cast<std::ptrdiff_t>(i)) / L);
    for (std::size_t j = 0; j < ax1.n; ++j) {
      const double e = env == Envelope::sech ? 1.0 / std::cosh(s[j]) : dP[j] / dmax;
      u[grid.index(i, j)] = std::clamp(P[j] + wave * e, -1.0, 1.0);
    }
  }
  return Field(grid, std::move(u));
}

Field tilted_initial(const SolutionBundle& profile, const Grid& grid, double a) {
  require_profile(profile);
  if (grid.dim() != 2) throw ConfigError("tilted initial data needs a 2D grid");
  const double norm = std::hypot(a, 1.0);
  std::vector<double> s(grid.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto x = grid.point(i);
    s[i] = (a * x[0] + x[1]) / norm;
  }
  return Field(grid, sample_profile(profile, profile.u, s));
}

void write_history_csv(const std::vector<double>& history, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << "iter,residual_inf\n";
  char buf[64];
  for (std::size_t i = 0; i < history.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g\n", i, history[i]);
    out << buf;
  }
}

void save_bundle(const SolutionBundle& b, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_field(b.u, dir / "u.nlrg");
  write_field(b.u1, dir / "u1.nlrg");
  if (b.dim() == 2) write_field(b.u2, dir / "u2.nlrg");
  write_history_csv(b.history, dir / "history.csv");
  std::ofstream meta(dir / "bundle.meta", std::ios::trunc);
  if (!meta) throw std::runtime_error("cannot write bundle metadata in '" + dir.string() + "'");
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  meta << "format=nlsym-bundle-1\n"
       << "dim=" << b.dim() << '\n'
       << "residual_inf=" << num(b.residual_inf) << '\n'
       << "monotone=" << (b.monotone ? "true" : "false") << '\n'
       << "min_derivative=" << num(b.min_derivative) << '\n'
       << "max_derivative=" << num(b.max_derivative) << '\n'
       << "frozen_band=" << num(b.frozen_band) << '\n'
       << "derivative=" << b.derivative << '\n'
       << "fallback=" << (b.fallback ? "true" : "false") << '\n'
       << "warnings=" << b.warnings.size() << '\n';
  for (std::size_t i = 0; i < b.warnings.size(); ++i) meta << "warning." << i << '=' << b.warnings[i] << '\n';
}

SolutionBundle load_bundle(const std::filesystem::path& dir) {
  std::ifstream meta(dir / "bundle.meta");
  if (!meta) throw ConfigError("no bundle.meta in '" + dir.string() + "'");
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(meta, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  if (kv["format"] != "nlsym-bundle-1") throw ConfigError("unsupported bundle format in '" + dir.string() + "'");
  auto number = [&](const std::string& k) {
    const auto it = kv.find(k);
    if (it == kv.end()) throw ConfigError("bundle.meta lacks '" + k + "'");
    return std::stod(it->second);
  };
  SolutionBundle b;
  b.u = read_field(dir / "u.nlrg");
  b.u1 = read_field(dir / "u1.nlrg");
  if (b.u.grid().dim() == 2) b.u2 = read_field(dir / "u2.nlrg");
  if (!(b.u1.grid() == b.u.grid()) || (b.dim() == 2 && !(b.u2.grid() == b.u.grid())))
    throw ConfigError("bundle fields live on different grids");
  b.residual_inf = number("residual_inf");
  b.monotone = kv["monotone"] == "true";
  b.min_derivative = number("min_derivative");
  b.max_derivative = number("max_derivative");
  b.frozen_band = number("frozen_band");
  b.derivative = kv["derivative"];
  b.fallback = kv["fallback"] == "true";
  for (std::size_t i = 0;; ++i) {
    const auto it = kv.find("warning." + std::to_string(i));
    if (it == kv.end()) break;
    b.warnings.push_back(it->second);
  }
  std::ifstream hist(dir / "history.csv");
  if (hist) {
    std::getline(hist, line);
    while (std::getline(hist, line)) {
      const auto comma = line.find(',');
      if (comma != std::string::npos) b.history.push_back(std::stod(line.substr(comma + 1)));
    }
  }
  return b;
}

}  // namespace nlsym
