#include "nlsym/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <numeric>
#include <sstream>

#include "nlsym/error.hpp"
#include "nlsym/parallel.hpp"

namespace nlsym {
namespace {

constexpr double kPi = std::numbers::pi;

double smoothstep5(double t) {
  t = std::clamp(t, 0.0, 1.0);
  return t * t * t * (t * (6.0 * t - 15.0) + 10.0);
}

}  // namespace

std::string_view to_string(KernelFamily f) {
  switch (f) {
    case KernelFamily::ball_indicator:
      return "ball_indicator";
    case KernelFamily::smooth_bump:
      return "smooth_bump";
    case KernelFamily::annular_mix:
      return "annular_mix";
  }
  return "ball_indicator";
}

KernelFamily kernel_family_from_string(std::string_view s) {
  if (s == "ball_indicator") return KernelFamily::ball_indicator;
  if (s == "smooth_bump") return KernelFamily::smooth_bump;
  if (s == "annular_mix") return KernelFamily::annular_mix;
  throw ConfigError("unknown kernel family '" + std::string(s) + "'");
}

void KernelSpec::validate() const {
  if (dim != 1 && dim != 2) throw SpecError("kernel dimension must be 1 or 2");
  if (!(r0 > 0.0) || !(R0 >= r0) || !std::isfinite(R0))
    throw SpecError("kernel radii must satisfy 0 < r0 <= R0 (r0=" + std::to_string(r0) +
                    ", R0=" + std::to_string(R0) + ")");
  if (!(m0 > 0.0) || !(M0 >= m0) || !std::isfinite(M0))
    throw SpecError("kernel bounds must satisfy 0 < m0 <= M0");
  if (family == KernelFamily::annular_mix && !(shell_weight > 0.0 && shell_weight <= 1.0))
    throw SpecError("annular_mix shell_weight must lie in (0, 1]");
}

double KernelSpec::profile(double rho) const {
  const double tol = 1e-12 * R0;
  switch (family) {
    case KernelFamily::ball_indicator:
      return rho <= R0 + tol ? 1.0 : 0.0;
    case KernelFamily::smooth_bump:
      if (rho <= r0) return 1.0;
      if (rho >= R0) return 0.0;
      return 1.0 - smoothstep5((rho - r0) / (R0 - r0));
    case KernelFamily::annular_mix:
      if (rho <= r0 + tol) return 1.0;
      return rho <= R0 + tol ? shell_weight : 0.0;
  }
  return 0.0;
}

double KernelSpec::continuum_mass() const {
  const double w = R0 - r0;
  switch (family) {
    case KernelFamily::ball_indicator:
      return dim == 1 ? 2.0 * R0 : kPi * R0 * R0;
    case KernelFamily::smooth_bump:
      // int_0^1 (1 - S) = 1/2 and int_0^1 t (1 - S) = 1/7 for the quintic S.
      return dim == 1 ? 2.0 * (r0 + 0.5 * w) : kPi * r0 * r0 + 2.0 * kPi * w * (0.5 * r0 + w / 7.0);
    case KernelFamily::annular_mix:
      return dim == 1 ? 2.0 * r0 + 2.0 * shell_weight * w : kPi * r0 * r0 + shell_weight * kPi * (R0 * R0 - r0 * r0);
  }
  return 1.0;
}

KernelSpec KernelSpec::tight(KernelFamily family, double r0, double R0, int dim) {
  KernelSpec s;
  s.family = family;
  s.r0 = r0;
  s.R0 = R0;
  s.dim = dim;
  s.m0 = s.M0 = s.plateau_density();
  return s;
}

DiscreteKernel::DiscreteKernel(int dim, std::array<double, 2> spacing, std::vector<KernelTap> taps,
                               double quadrature_slack)
    : dim_(dim), spacing_(spacing), taps_(std::move(taps)), slack_(quadrature_slack) {
  if (dim_ != 1 && dim_ != 2) throw ConfigError("kernel dimension must be 1 or 2");
  if (dim_ == 1) spacing_[1] = 1.0;
  for (auto& t : taps_) {
    if (dim_ == 1) t.offset[1] = 0;
    if (!std::isfinite(t.weight)) throw ConfigError("non-finite kernel weight");
  }
  if (taps_.empty()) throw ConfigError("kernel has no taps");
}

double DiscreteKernel::total_weight() const {
  std::vector<double> m(taps_.size());
  for (std::size_t i = 0; i < taps_.size(); ++i) m[i] = mass(taps_[i]);
  return pairwise_sum(m);
}

std::array<double, 2> DiscreteKernel::offset_vector(const KernelTap& t) const {
  return {t.offset[0] * spacing_[0], dim_ == 1 ? 0.0 : t.offset[1] * spacing_[1]};
}

double DiscreteKernel::offset_length(const KernelTap& t) const {
  const auto v = offset_vector(t);
  return std::hypot(v[0], v[1]);
}

double DiscreteKernel::support_radius() const {
  double r = 0.0;
  for (const auto& t : taps_)
    if (t.weight != 0.0) r = std::max(r, offset_length(t));
  return r;
}

DiscreteKernel build_kernel(const KernelSpec& spec, std::span<const double> h) {
  spec.validate();
  if (static_cast<int>(h.size()) < spec.dim) throw ConfigError("need one spacing per kernel axis");
  std::array<double, 2> sp{h[0], spec.dim == 2 ? h[1] : 1.0};
  for (int a = 0; a < spec.dim; ++a) {
    if (!(sp[a] > 0.0)) throw ConfigError("kernel spacing must be positive");
    if (sp[a] > 0.5 * spec.r0 * (1.0 + 1e-12))
      throw ResolutionError("spacing " + std::to_string(sp[a]) + " exceeds r0/2 = " + std::to_string(0.5 * spec.r0));
  }
  const int m0 = static_cast<int>(std::floor(spec.R0 / sp[0] + 1e-9));
  const int m1 = spec.dim == 2 ? static_cast<int>(std::floor(spec.R0 / sp[1] + 1e-9)) : 0;

  std::map<std::array<int, 2>, double> raw;
  for (int i = -m0; i <= m0; ++i)
    for (int j = -m1; j <= m1; ++j) {
      const double w = spec.profile(std::hypot(i * sp[0], j * sp[1]));
      if (w > 0.0) raw[{i, j}] = w;
    }
  std::vector<KernelTap> taps;
  taps.reserve(raw.size());
  for (const auto& [off, w] : raw) {
    const auto it = raw.find({-off[0], -off[1]});
    const double wm = it == raw.end() ? 0.0 : it->second;
    taps.push_back({off, 0.5 * (w + wm)});
  }
  const double vol = spec.dim == 1 ? sp[0] : sp[0] * sp[1];
  std::vector<double> masses(taps.size());
  for (std::size_t i = 0; i < taps.size(); ++i) masses[i] = taps[i].weight * vol;
  const double discrete_mass = pairwise_sum(masses);
  for (auto& t : taps) t.weight /= discrete_mass;
  const double slack = std::abs(spec.continuum_mass() / discrete_mass - 1.0);
  return DiscreteKernel(spec.dim, sp, std::move(taps), slack);
}

std::string ValidationReport::to_text() const {
  std::ostringstream o;
  char buf[160];
  auto line = [&](const char* k, double v) {
    std::snprintf(buf, sizeof buf, "%s=%.17g\n", k, v);
    o << buf;
  };
  auto flag = [&](const char* k, bool v) { o << k << '=' << (v ? "pass" : "fail") << '\n'; };
  line("evenness_defect", evenness_defect);
  o << "evenness_offender=" << evenness_offender[0] << ',' << evenness_offender[1] << '\n';
  line("normalization_defect", normalization_defect);
  line("min_inner_density", min_inner_density);
  line("lower_bound", lower_bound);
  line("max_density", max_density);
  line("upper_bound", upper_bound);
  line("support_radius", support_radius);
  o << "support_offender=" << support_offender[0] << ',' << support_offender[1] << '\n';
  line("quadrature_slack", quadrature_slack);
  flag("even", even);
  flag("normalized", normalized);
  flag("nonnegative", nonnegative);
  flag("lower", lower);
  flag("upper", upper);
  flag("support", support);
  flag("overall", passed());
  return o.str();
}

ValidationReport validate_kernel(const DiscreteKernel& k, const KernelSpec& spec) {
  ValidationReport r;
  std::map<std::array<int, 2>, double> w;
  for (const auto& t : k.taps()) w[t.offset] += t.weight;
  auto weight_at = [&](std::array<int, 2> off) {
    const auto it = w.find(off);
    return it == w.end() ? 0.0 : it->second;
  };

  for (const auto& [off, wt] : w) {
    const double d = std::abs(wt - weight_at({-off[0], -off[1]}));
    if (d > r.evenness_defect) {
      r.evenness_defect = d;
      r.evenness_offender = off;
    }
  }
  r.even = r.evenness_defect == 0.0;
  r.normalization_defect = std::abs(k.total_weight() - 1.0);
  r.normalized = r.normalization_defect <= 1e-14;
  r.nonnegative = std::all_of(k.taps().begin(), k.taps().end(), [](const KernelTap& t) { return t.weight >= 0.0; });

  r.quadrature_slack = k.quadrature_slack();
  const auto& sp = k.spacing();
  const double hmax = k.dim() == 1 ? sp[0] : std::max(sp[0], sp[1]);
  const double inner = spec.r0 - hmax;
  r.min_inner_density = INFINITY;
  const int m0 = static_cast<int>(std::floor(std::max(inner, 0.0) / sp[0] + 1e-9));
  const int m1 = k.dim() == 2 ? static_cast<int>(std::floor(std::max(inner, 0.0) / sp[1] + 1e-9)) : 0;
  for (int i = -m0; i <= m0; ++i)
    for (int j = -m1; j <= m1; ++j)
      if (std::hypot(i * sp[0], k.dim() == 2 ? j * sp[1] : 0.0) <= inner * (1.0 + 1e-12))
        r.min_inner_density = std::min(r.min_inner_density, weight_at({i, j}));
  if (!std::isfinite(r.min_inner_density)) r.min_inner_density = weight_at({0, 0});
  r.lower_bound = spec.m0 * (1.0 - r.quadrature_slack);
  r.lower = r.min_inner_density >= r.lower_bound * (1.0 - 1e-12);

  r.max_density = 0.0;
  for (const auto& t : k.taps()) r.max_density = std::max(r.max_density, t.weight);
  r.upper_bound = spec.M0 * (1.0 + r.quadrature_slack);
  r.upper = r.max_density <= r.upper_bound * (1.0 + 1e-12);

  r.support = true;
  for (const auto& t : k.taps()) {
    if (t.weight == 0.0) continue;
    const double len = k.offset_length(t);
    if (len > r.support_radius) {
      r.support_radius = len;
    }
    if (len > spec.R0 * (1.0 + 1e-12) && r.support) {
      r.support = false;
      r.support_offender = t.offset;
    }
  }
  return r;
}

DiscreteKernel project_kernel(const DiscreteKernel& k2, int p, int q) {
  if (k2.dim() != 2) throw ConfigError("projection needs a 2D kernel");
  if (q <= 0) throw ConfigError("projection direction needs q > 0");
  if (std::gcd(std::abs(p), q) != 1) throw ConfigError("projection direction (p, q) must be coprime");
  const auto& sp = k2.spacing();
  double hs = 0.0;
  if (p == 0) {
    hs = sp[1];
  } else {
    if (std::abs(sp[0] - sp[1]) > 1e-14 * sp[0]) throw ConfigError("tilted projection needs equal spacings");
    hs = sp[0] / std::hypot(static_cast<double>(p), static_cast<double>(q));
  }
  std::map<int, double> mass;
  for (const auto& t : k2.taps()) mass[p * t.offset[0] + q * t.offset[1]] += k2.mass(t);
  std::vector<KernelTap> taps;
  for (const auto& [m, w] : mass) {
    const double wm = mass.at(-m);
    taps.push_back({{m, 0}, 0.5 * (w + wm) / hs});
  }
  return DiscreteKernel(1, {hs, 1.0}, std::move(taps), k2.quadrature_slack());
}

void write_kernel_csv(const DiscreteKernel& k, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << "offset_x,offset_y,weight\n";
  char buf[128];
  for (const auto& t : k.taps()) {
    const auto v = k.offset_vector(t);
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", v[0], v[1], t.weight);
    out << buf;
  }
}

DiscreteKernel read_kernel_csv(const std::filesystem::path& path, int dim, std::array<double, 2> spacing) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open stencil file '" + path.string() + "'");
  std::string line;
  std::vector<KernelTap> taps;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#' || line.rfind("offset_x", 0) == 0) continue;
    double ox = 0, oy = 0, w = 0;
    if (std::sscanf(line.c_str(), "%lf,%lf,%lf", &ox, &oy, &w) != 3)
      throw ConfigError("stencil line " + std::to_string(lineno) + " is not offset_x,offset_y,weight");
    auto snap = [&](double v, double h) {
      const double r = std::round(v / h);
      if (std::abs(r * h - v) > 1e-9 * std::max(1.0, std::abs(v)))
        throw ConfigError("stencil offset " + std::to_string(v) + " is not a lattice multiple");
      return static_cast<int>(r);
    };
    taps.push_back({{snap(ox, spacing[0]), dim == 2 ? snap(oy, spacing[1]) : 0}, w});
  }
  return DiscreteKernel(dim, spacing, std::move(taps));
}

}  // namespace nlsym
