#include "config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "nlsym/error.hpp"

namespace nlsym::cli {

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  double x = 0.0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size() || !std::isfinite(x))
    throw ConfigError("config: " + key + " expects a number, got '" + v + "'");
  return x;
}

long to_long(const std::string& key, const std::string& v) {
  long x = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size())
    throw ConfigError("config: " + key + " expects an integer, got '" + v + "'");
  return x;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("config: " + key + " expects true/false, got '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(v);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void require_positive(const std::string& key, double x) {
  if (!(x > 0.0)) throw ConfigError("config: " + key + " must be positive");
}

}  // namespace

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

ConfigMap ConfigMap::parse(const std::string& text, const std::string& source) {
  ConfigMap m;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(source + ":" + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError(source + ":" + std::to_string(lineno) + ": empty key");
    m.values_[key] = trim(line.substr(eq + 1));
  }
  return m;
}

ConfigMap ConfigMap::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

std::optional<std::string> ConfigMap::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

void ConfigMap::apply_env(const std::vector<std::string>& known_keys) {
  for (const auto& key : known_keys) {
    std::string name = "NLSYM_";
    for (char c : key) name += c == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (const char* v = std::getenv(name.c_str())) values_[key] = trim(v);
  }
}

const std::vector<std::string>& RunConfig::known_keys() {
  static const std::vector<std::string> keys = {
      "kernel.family", "kernel.r0", "kernel.R0", "kernel.m0", "kernel.M0", "kernel.shell_weight", "kernel.file",
      "grid.dim", "grid.n1", "grid.h1", "grid.lo1", "grid.bc1", "grid.n2", "grid.h2", "grid.lo2", "grid.bc2",
      "nonlinearity", "nonlinearity.theta",
      "solver.tol", "solver.max_iter", "solver.dt", "solver.lambda", "solver.handoff", "solver.newton",
      "solver.newton_tol", "solver.newton_steps", "solver.forcing", "solver.scheme1", "solver.scheme2",
      "init.kind", "init.a", "init.amp", "init.envelope", "init.file",
      "rigidity.R_list", "rigidity.eps_floor", "rigidity.harnack_radius", "rigidity.kappa",
      "rigidity.planarity_threshold",
      "output.dir", "seed", "threads"};
  return keys;
}

Grid RunConfig::make_grid() const {
  if (grid.dim == 1) return Grid({grid.axes[0]});
  return Grid::plane(grid.axes[0], grid.axes[1]);
}

RunConfig RunConfig::from_map(const ConfigMap& map) {
  const auto& keys = known_keys();
  for (const auto& [k, v] : map.entries())
    if (std::find(keys.begin(), keys.end(), k) == keys.end()) throw ConfigError("config: unknown key '" + k + "'");

  RunConfig c;
  auto str = [&](const std::string& k, const std::string& def) { return map.get(k).value_or(def); };
  auto num = [&](const std::string& k, double def) {
    auto v = map.get(k);
    return v ? to_double(k, *v) : def;
  };
  auto integer = [&](const std::string& k, long def) {
    auto v = map.get(k);
    return v ? to_long(k, *v) : def;
  };

  c.grid.dim = static_cast<int>(integer("grid.dim", 2));
  if (c.grid.dim != 1 && c.grid.dim != 2) throw ConfigError("config: grid.dim must be 1 or 2");

  try {
    c.kernel.family = kernel_family_from_string(str("kernel.family", "ball_indicator"));
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config: kernel.family: ") + e.what());
  }
  c.kernel.r0 = num("kernel.r0", 1.0);
  c.kernel.R0 = num("kernel.R0", c.kernel.r0);
  c.kernel.shell_weight = num("kernel.shell_weight", 0.5);
  c.kernel.dim = c.grid.dim;
  if (c.kernel.r0 > 0.0 && c.kernel.R0 >= c.kernel.r0) {
    auto tight = KernelSpec::tight(c.kernel.family, c.kernel.r0, c.kernel.R0, c.grid.dim);
    c.kernel.m0 = tight.m0;
    c.kernel.M0 = tight.M0;
  }
  c.kernel.m0 = num("kernel.m0", c.kernel.m0);
  c.kernel.M0 = num("kernel.M0", c.kernel.M0);
  c.kernel.validate();
  c.kernel_file = str("kernel.file", "");

  for (int a = 0; a < c.grid.dim; ++a) {
    const std::string s = std::to_string(a + 1);
    Axis& ax = c.grid.axes[static_cast<std::size_t>(a)];
    long n = integer("grid.n" + s, a == 0 && c.grid.dim == 2 ? 64 : 65);
    if (n < 2) throw ConfigError("config: grid.n" + s + " must be at least 2");
    ax.n = static_cast<std::size_t>(n);
    ax.h = num("grid.h" + s, 0.5);
    require_positive("grid.h" + s, ax.h);
    std::string bc = str("grid.bc" + s, a == 0 && c.grid.dim == 2 ? "periodic" : "clamp");
    try {
      ax.boundary = boundary_from_string(bc);
    } catch (const std::exception& e) {
      throw ConfigError("config: grid.bc" + s + ": " + e.what());
    }
    double span = ax.boundary == Boundary::periodic ? static_cast<double>(ax.n) * ax.h
                                                    : static_cast<double>(ax.n - 1) * ax.h;
    ax.origin = num("grid.lo" + s, -0.5 * span);
  }

  c.nonlinearity = str("nonlinearity", "scaled_cubic");
  c.theta = num("nonlinearity.theta", 0.5);
  require_positive("nonlinearity.theta", c.theta);
  try {
    (void)c.make_nonlinearity();
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config: nonlinearity: ") + e.what());
  }

  auto& sv = c.solver;
  sv.tol = num("solver.tol", sv.tol);
  sv.max_iter = integer("solver.max_iter", sv.max_iter);
  sv.dt = num("solver.dt", sv.dt);
  sv.lambda = num("solver.lambda", sv.lambda);
  sv.handoff = num("solver.handoff", sv.handoff);
  sv.newton = to_bool("solver.newton", str("solver.newton", "true"));
  sv.newton_tol = num("solver.newton_tol", sv.newton_tol);
  sv.newton_steps = static_cast<int>(integer("solver.newton_steps", sv.newton_steps));
  sv.forcing = num("solver.forcing", sv.forcing);
  require_positive("solver.tol", sv.tol);
  require_positive("solver.max_iter", static_cast<double>(sv.max_iter));
  if (map.has("solver.dt")) require_positive("solver.dt", sv.dt);
  require_positive("solver.lambda", sv.lambda);
  require_positive("solver.handoff", sv.handoff);
  require_positive("solver.newton_tol", sv.newton_tol);
  require_positive("solver.newton_steps", sv.newton_steps);
  require_positive("solver.forcing", sv.forcing);
  if (map.has("solver.scheme1") || map.has("solver.scheme2")) {
    Grid g = c.make_grid();
    for (int a = 0; a < c.grid.dim; ++a) {
      auto v = map.get("solver.scheme" + std::to_string(a + 1));
      try {
        sv.schemes.push_back(v ? derivative_scheme_from_string(*v) : default_scheme(g, a));
      } catch (const std::exception& e) {
        throw ConfigError(std::string("config: solver.scheme: ") + e.what());
      }
    }
  }

  auto& in = c.init;
  std::string kind = str("init.kind", "perturbed");
  if (kind == "tilt")
    in.kind = InitKind::tilt;
  else if (kind == "perturbed")
    in.kind = InitKind::perturbed;
  else if (kind == "file")
    in.kind = InitKind::file;
  else
    throw ConfigError("config: init.kind must be tilt, perturbed or file");
  in.a = num("init.a", 0.0);
  in.amp = num("init.amp", in.amp);
  if (in.amp < 0.0) throw ConfigError("config: init.amp must be non-negative");
  try {
    in.envelope = envelope_from_string(str("init.envelope", "sech"));
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config: init.envelope: ") + e.what());
  }
  in.file = str("init.file", "");

  auto& rg = c.rigidity;
  if (auto v = map.get("rigidity.R_list")) {
    rg.R_list.clear();
    for (const auto& item : split_list(*v)) rg.R_list.push_back(to_double("rigidity.R_list", item));
  }
  if (rg.R_list.empty()) throw ConfigError("config: rigidity.R_list is empty");
  for (std::size_t i = 0; i < rg.R_list.size(); ++i) {
    require_positive("rigidity.R_list", rg.R_list[i]);
    if (i > 0 && !(rg.R_list[i] > rg.R_list[i - 1]))
      throw ConfigError("config: rigidity.R_list must be sorted ascending");
  }
  rg.eps_floor = num("rigidity.eps_floor", rg.eps_floor);
  rg.harnack_radius = num("rigidity.harnack_radius", rg.harnack_radius);
  rg.kappa = num("rigidity.kappa", rg.kappa);
  rg.planarity_threshold = num("rigidity.planarity_threshold", rg.planarity_threshold);
  require_positive("rigidity.eps_floor", rg.eps_floor);
  if (rg.harnack_radius < 0.0) throw ConfigError("config: rigidity.harnack_radius must be non-negative");
  require_positive("rigidity.kappa", rg.kappa);
  require_positive("rigidity.planarity_threshold", rg.planarity_threshold);

  c.out = str("output.dir", "out");
  long seed = integer("seed", 1);
  if (seed < 0) throw ConfigError("config: seed must be non-negative");
  c.seed = static_cast<std::uint64_t>(seed);
  c.threads = static_cast<int>(integer("threads", 1));
  if (c.threads < 1) throw ConfigError("config: threads must be at least 1");
  return c;
}

std::string RunConfig::to_text() const {
  std::ostringstream o;
  auto kv = [&](const std::string& k, const std::string& v) { o << k << " = " << v << '\n'; };
  kv("kernel.family", std::string(to_string(kernel.family)));
  kv("kernel.r0", format_double(kernel.r0));
  kv("kernel.R0", format_double(kernel.R0));
  kv("kernel.m0", format_double(kernel.m0));
  kv("kernel.M0", format_double(kernel.M0));
  kv("kernel.shell_weight", format_double(kernel.shell_weight));
  if (!kernel_file.empty()) kv("kernel.file", kernel_file.string());
  kv("grid.dim", std::to_string(grid.dim));
  for (int a = 0; a < grid.dim; ++a) {
    const std::string s = std::to_string(a + 1);
    const Axis& ax = grid.axes[static_cast<std::size_t>(a)];
    kv("grid.n" + s, std::to_string(ax.n));
    kv("grid.h" + s, format_double(ax.h));
    kv("grid.lo" + s, format_double(ax.origin));
    kv("grid.bc" + s, std::string(to_string(ax.boundary)));
  }
  kv("nonlinearity", nonlinearity);
  kv("nonlinearity.theta", format_double(theta));
  kv("solver.tol", format_double(solver.tol));
  kv("solver.max_iter", std::to_string(solver.max_iter));
  kv("solver.dt", format_double(solver.dt));
  kv("solver.lambda", format_double(solver.lambda));
  kv("solver.handoff", format_double(solver.handoff));
  kv("solver.newton", solver.newton ? "true" : "false");
  kv("solver.newton_tol", format_double(solver.newton_tol));
  kv("solver.newton_steps", std::to_string(solver.newton_steps));
  kv("solver.forcing", format_double(solver.forcing));
  for (std::size_t a = 0; a < solver.schemes.size(); ++a)
    kv("solver.scheme" + std::to_string(a + 1), std::string(to_string(solver.schemes[a])));
  kv("init.kind", init.kind == InitKind::tilt ? "tilt" : init.kind == InitKind::perturbed ? "perturbed" : "file");
  kv("init.a", format_double(init.a));
  kv("init.amp", format_double(init.amp));
  kv("init.envelope", std::string(to_string(init.envelope)));
  if (!init.file.empty()) kv("init.file", init.file.string());
  std::string rl;
  for (std::size_t i = 0; i < rigidity.R_list.size(); ++i) rl += (i ? "," : "") + format_double(rigidity.R_list[i]);
  kv("rigidity.R_list", rl);
  kv("rigidity.eps_floor", format_double(rigidity.eps_floor));
  kv("rigidity.harnack_radius", format_double(rigidity.harnack_radius));
  kv("rigidity.kappa", format_double(rigidity.kappa));
  kv("rigidity.planarity_threshold", format_double(rigidity.planarity_threshold));
  kv("seed", std::to_string(seed));
  return o.str();
}

}  // namespace nlsym::cli
