#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nlsym/derivative.hpp"
#include "nlsym/grid.hpp"
#include "nlsym/kernel.hpp"
#include "nlsym/nonlinearity.hpp"
#include "nlsym/rigidity.hpp"
#include "nlsym/solvers.hpp"

namespace nlsym::cli {

/// Flat `key = value` settings. Later assignments win; `#` starts a comment.
class ConfigMap {
 public:
  static ConfigMap parse(const std::string& text, const std::string& source = "<string>");
  static ConfigMap load(const std::filesystem::path& path);

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  bool has(const std::string& key) const { return values_.count(key) != 0; }
  std::optional<std::string> get(const std::string& key) const;
  const std::map<std::string, std::string>& entries() const { return values_; }

  /// Overrides any known key from NLSYM_<KEY> (upper case, '.' -> '_').
  void apply_env(const std::vector<std::string>& known_keys);

 private:
  std::map<std::string, std::string> values_;
};

enum class InitKind { tilt, perturbed, file };

struct GridConfig {
  int dim = 2;
  std::array<Axis, 2> axes{};
};

struct SolverConfig {
  double tol = 1e-8;
  long max_iter = 20000;  ///< profile fixed-point iterations / relaxation steps
  double dt = 0.0;
  double lambda = 0.3;
  double handoff = 1e-3;
  bool newton = true;
  double newton_tol = 1e-10;
  int newton_steps = 30;
  double forcing = 1e-4;
  std::vector<DerivativeScheme> schemes;  ///< empty: per-axis defaults
};

struct InitConfig {
  InitKind kind = InitKind::perturbed;
  double a = 0.0;
  double amp = 0.1;
  Envelope envelope = Envelope::sech;
  std::filesystem::path file;
};

struct RunConfig {
  KernelSpec kernel;
  std::filesystem::path kernel_file;  ///< optional stencil CSV replacing the built kernel
  GridConfig grid;
  std::string nonlinearity = "scaled_cubic";
  double theta = 0.5;
  SolverConfig solver;
  InitConfig init;
  VerifyOptions rigidity;
  std::filesystem::path out = "out";
  std::uint64_t seed = 1;
  int threads = 1;

  Nonlinearity make_nonlinearity() const { return Nonlinearity::by_name(nonlinearity, theta); }
  Grid make_grid() const;

  /// Every key the parser accepts.
  static const std::vector<std::string>& known_keys();
  /// Throws ConfigError on unknown keys, unparsable numbers or broken invariants.
  static RunConfig from_map(const ConfigMap& map);
  /// Canonical `key = value` dump (%.17g numbers).
  std::string to_text() const;
};

std::string format_double(double x);

}  // namespace nlsym::cli
