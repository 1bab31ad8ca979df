#include "commands.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include "nlsym/error.hpp"
#include "nlsym/field_io.hpp"
#include "nlsym/kernel.hpp"
#include "nlsym/operator.hpp"
#include "nlsym/parallel.hpp"
#include "nlsym/rigidity.hpp"
#include "nlsym/solvers.hpp"

namespace nlsym::cli {

namespace fs = std::filesystem;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

void prepare_out(const RunConfig& cfg) {
  fs::create_directories(cfg.out);
  write_text(cfg.out / "config.resolved", cfg.to_text());
}

std::array<double, 2> spacing(const Grid& g) {
  return {g.axis(0).h, g.dim() == 2 ? g.axis(1).h : g.axis(0).h};
}

DiscreteKernel make_kernel(const RunConfig& cfg, const Grid& g) {
  if (!cfg.kernel_file.empty()) return read_kernel_csv(cfg.kernel_file, g.dim(), spacing(g));
  KernelSpec spec = cfg.kernel;
  spec.dim = g.dim();
  std::vector<double> h{g.axis(0).h};
  if (g.dim() == 2) h.push_back(g.axis(1).h);
  return build_kernel(spec, h);
}

ProfileOptions profile_options(const RunConfig& cfg) {
  ProfileOptions po;
  po.tol = cfg.solver.tol;
  po.max_iter = static_cast<int>(std::min<long>(cfg.solver.max_iter, 1L << 30));
  po.lambda = cfg.solver.lambda;
  po.handoff = cfg.solver.newton ? cfg.solver.handoff : cfg.solver.tol;
  if (!cfg.solver.schemes.empty()) po.scheme = cfg.solver.schemes.back();
  po.newton.tol = std::min(cfg.solver.newton_tol, cfg.solver.tol);
  po.newton.max_steps = cfg.solver.newton_steps;
  return po;
}

/// Symmetric 1D clamp line with spacing h reaching at least `half`.
Grid profile_line(double h, double half) {
  const auto m = static_cast<std::size_t>(std::ceil(half / h - 1e-9));
  return Grid::line(2 * m + 1, h, -static_cast<double>(m) * h, Boundary::clamp);
}

std::string profile_summary(const SolutionBundle& b) {
  const Field& u = b.u;
  const Axis& ax = u.grid().axis(0);
  std::ostringstream o;
  o << "residual_inf=" << format_double(b.residual_inf) << '\n';
  o << "monotone=" << (b.monotone ? "true" : "false") << '\n';
  o << "min_derivative=" << format_double(b.min_derivative) << '\n';
  o << "max_derivative=" << format_double(b.max_derivative) << '\n';
  const double j0 = -ax.origin / ax.h;
  if (std::abs(j0 - std::round(j0)) < 1e-9 && j0 >= 0 && j0 < static_cast<double>(ax.n))
    o << "u_at_0=" << format_double(u[static_cast<std::size_t>(std::llround(j0))]) << '\n';
  double fd = INFINITY;
  for (std::size_t i = 0; i + 1 < u.size(); ++i) fd = std::min(fd, u[i + 1] - u[i]);
  o << "min_forward_difference=" << format_double(fd) << '\n';
  o << "left_tail_gap=" << format_double(std::abs(u[0] + 1.0)) << '\n';
  o << "right_tail_gap=" << format_double(std::abs(u[u.size() - 1] - 1.0)) << '\n';
  o << "iterations=" << b.history.size() << '\n';
  for (const auto& w : b.warnings) o << "warning=" << w << '\n';
  return o.str();
}

std::string bundle_summary(const SolutionBundle& b) {
  std::ostringstream o;
  o << "residual_inf=" << format_double(b.residual_inf) << '\n';
  o << "monotone=" << (b.monotone ? "true" : "false") << '\n';
  o << "min_derivative=" << format_double(b.min_derivative) << '\n';
  o << "max_derivative=" << format_double(b.max_derivative) << '\n';
  o << "frozen_band=" << format_double(b.frozen_band) << '\n';
  o << "derivative=" << b.derivative << '\n';
  o << "fallback=" << (b.fallback ? "true" : "false") << '\n';
  o << "iterations=" << b.history.size() << '\n';
  for (const auto& w : b.warnings) o << "warning=" << w << '\n';
  return o.str();
}

}  // namespace

int cmd_kernel_check(const RunConfig& cfg, std::ostream& log) {
  const Grid g = cfg.make_grid();
  const DiscreteKernel k = make_kernel(cfg, g);
  KernelSpec spec = cfg.kernel;
  spec.dim = g.dim();
  const ValidationReport rep = validate_kernel(k, spec);

  std::string text = "taps=" + std::to_string(k.taps().size()) + '\n' + rep.to_text();
  if (rep.even) {
    // Identity check on a periodic lattice wide enough for the stencil.
    const double reach = k.support_radius();
    std::vector<Axis> axes;
    for (int a = 0; a < g.dim(); ++a) {
      const double h = g.axis(a).h;
      const auto n = std::max<std::size_t>(32, static_cast<std::size_t>(std::ceil(4.0 * reach / h)));
      axes.push_back(Axis{n, h, -0.5 * static_cast<double>(n) * h, Boundary::periodic});
    }
    const R1Report r1 = check_R1(OperatorContext(k, Grid(axes)), 10, cfg.seed);
    text += r1.to_text();
  }
  prepare_out(cfg);
  write_text(cfg.out / "kernel_report.txt", text);
  write_kernel_csv(k, cfg.out / "kernel.csv");
  log << text;
  log << (rep.passed() ? "kernel-check: PASS\n" : "kernel-check: FAIL\n");
  return rep.passed() ? kPass : kNumericalFail;
}

int cmd_solve_profile(const RunConfig& cfg, std::ostream& log) {
  const Grid g = cfg.make_grid();
  const Nonlinearity f = cfg.make_nonlinearity();
  DiscreteKernel k1;
  Grid line;
  if (g.dim() == 1) {
    line = g;
    k1 = make_kernel(cfg, g);
  } else {
    const Axis& x2 = g.axis(1);
    line = Grid({x2});
    k1 = project_kernel(make_kernel(cfg, g), 0, 1);
  }
  prepare_out(cfg);
  SolutionBundle b;
  try {
    b = solve_profile_1d(k1, f, line, profile_options(cfg));
  } catch (const SolverError& e) {
    write_history_csv(e.history(), cfg.out / "history.csv");
    log << "solve-profile: " << e.what() << '\n' << "solve-profile: FAIL\n";
    return kNumericalFail;
  }
  save_bundle(b, cfg.out / "profile");
  write_field_csv(b.u, cfg.out / "profile.csv");
  write_history_csv(b.history, cfg.out / "history.csv");
  const std::string text = profile_summary(b);
  write_text(cfg.out / "profile_report.txt", text);
  log << text;
  const bool ok = b.residual_inf <= cfg.solver.tol;
  log << (ok ? "solve-profile: PASS\n" : "solve-profile: FAIL\n");
  return ok ? kPass : kNumericalFail;
}

int cmd_relax2d(const RunConfig& cfg, std::ostream& log) {
  const Nonlinearity f = cfg.make_nonlinearity();
  Field u0;
  Grid g;
  if (cfg.init.kind == InitKind::file) {
    if (cfg.init.file.empty()) throw ConfigError("init.kind = file needs init.file");
    u0 = read_field(cfg.init.file);
    g = u0.grid();
  } else {
    g = cfg.make_grid();
  }
  if (g.dim() != 2) throw ConfigError("relax2d needs a 2D grid");
  const DiscreteKernel k2 = make_kernel(cfg, g);

  const bool any_clamp = g.axis(0).boundary == Boundary::clamp || g.axis(1).boundary == Boundary::clamp;
  const double band = cfg.init.kind == InitKind::tilt && any_clamp ? k2.support_radius() : 0.0;
  if (cfg.init.kind != InitKind::file) {
    const Axis& x1 = g.axis(0);
    const Axis& x2 = g.axis(1);
    auto reach = [](const Axis& ax) {
      return std::max(std::abs(ax.origin), std::abs(ax.coord(static_cast<std::ptrdiff_t>(ax.n) - 1)));
    };
    double half = reach(x2);
    if (cfg.init.kind == InitKind::tilt) {
      if (x1.boundary == Boundary::periodic && cfg.init.a != 0.0)
        throw ConfigError("a tilted front is not periodic in x1; use grid.bc1 = clamp");
      half = (std::abs(cfg.init.a) * reach(x1) + half) / std::sqrt(cfg.init.a * cfg.init.a + 1.0);
    }
    const Grid line = profile_line(x2.h, half + 2.0 * k2.support_radius());
    const SolutionBundle prof = solve_profile_1d(project_kernel(k2, 0, 1), f, line, profile_options(cfg));
    u0 = cfg.init.kind == InitKind::tilt ? tilted_initial(prof, g, cfg.init.a)
                                         : perturbed_initial(prof, g, cfg.init.amp, cfg.init.envelope);
  }

  RelaxOptions ro;
  ro.dt = cfg.solver.dt;
  ro.tol = cfg.solver.tol;
  ro.max_steps = cfg.solver.max_iter;
  ro.handoff = cfg.solver.newton ? cfg.solver.handoff : 0.0;
  ro.frozen_band = band;
  ro.schemes = cfg.solver.schemes;
  prepare_out(cfg);
  SolutionBundle b = relax_2d(k2, f, g, u0, ro);

  if (cfg.solver.newton && b.residual_inf > cfg.solver.tol) {
    const OperatorContext ctx(k2, g);
    NewtonOptions no;
    no.tol = std::min(cfg.solver.newton_tol, cfg.solver.tol);
    no.max_steps = cfg.solver.newton_steps;
    no.forcing = cfg.solver.forcing;
    no.symmetric = band == 0.0 && symmetry_available(g) && symmetry_defect(g, b.u.values()) < 1e-12;
    b = newton_polish(ctx, f, b, no, BundleOptions{cfg.solver.schemes, band});
  }

  save_bundle(b, cfg.out / "bundle");
  write_history_csv(b.history, cfg.out / "history.csv");
  const std::string text = bundle_summary(b);
  write_text(cfg.out / "relax_report.txt", text);
  log << text;
  if (!b.monotone) {
    log << "relax2d: monotonicity lost\n";
    return kHypothesisViolated;
  }
  const bool ok = b.residual_inf <= cfg.solver.tol;
  log << (ok ? "relax2d: PASS\n" : "relax2d: FAIL\n");
  return ok ? kPass : kNumericalFail;
}

int cmd_verify(const RunConfig& cfg, const fs::path& bundle_dir, std::ostream& log) {
  if (bundle_dir.empty()) throw ConfigError("verify needs --bundle DIR");
  if (!fs::exists(bundle_dir / "bundle.meta")) throw ConfigError("no bundle in " + bundle_dir.string());
  const SolutionBundle b = load_bundle(bundle_dir);
  if (b.dim() != 2) throw ConfigError("verify needs a 2D bundle");
  if (!b.monotone) {
    log << "verify: bundle is not monotone in x2 (min u2 = " << format_double(b.min_derivative)
        << "); refusing to verify\n";
    return kHypothesisViolated;
  }
  const Nonlinearity f = cfg.make_nonlinearity();
  const OperatorContext ctx(make_kernel(cfg, b.u.grid()), b.u.grid());
  VerifyResult r;
  try {
    r = verify_energy_chain(ctx, f, b, cfg.rigidity);
  } catch (const DomainError& e) {
    log << "verify: " << e.what() << '\n';
    return kHypothesisViolated;
  }
  prepare_out(cfg);
  write_text(cfg.out / "report.csv", r.to_csv());
  write_text(cfg.out / "report.txt", r.to_text());
  log << r.to_text();
  const bool ok = r.planar && r.cs_all && r.chain_all;
  log << (ok ? "verify: PASS\n" : "verify: FAIL\n");
  return ok ? kPass : kNumericalFail;
}

int cmd_manufacture(const RunConfig& cfg, std::ostream& log) {
  const Grid g = cfg.make_grid();
  if (g.dim() != 2) throw ConfigError("manufacture needs a 2D grid");
  const Nonlinearity f = cfg.make_nonlinearity();
  const SolutionBundle b = manufacture_planar(make_kernel(cfg, g), f, g, cfg.init.a, profile_options(cfg));
  prepare_out(cfg);
  save_bundle(b, cfg.out / "bundle");
  const std::string text = bundle_summary(b);
  write_text(cfg.out / "manufacture_report.txt", text);
  log << text;
  const bool ok = b.residual_inf <= cfg.solver.tol;
  log << (ok ? "manufacture: PASS\n" : "manufacture: FAIL\n");
  return ok ? kPass : kNumericalFail;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Nonlocal equation solver and one-dimensional symmetry checks"};
  app.require_subcommand(1);
  std::string config_path;
  std::string out_dir;
  std::string bundle;
  std::string init;
  long long seed = -1;
  int threads = 0;
  double a = NAN;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "Config file (key = value)");
    sub->add_option("--out", out_dir, "Output directory");
    sub->add_option("--seed", seed, "RNG seed")->check(CLI::NonNegativeNumber);
    sub->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
  };
  auto* kc = app.add_subcommand("kernel-check", "Build and validate the kernel");
  auto* sp = app.add_subcommand("solve-profile", "Solve the 1D monotone front");
  auto* rx = app.add_subcommand("relax2d", "Relax a 2D initial field to a solution");
  auto* vf = app.add_subcommand("verify", "Run the rigidity checks on a bundle");
  auto* mf = app.add_subcommand("manufacture", "Write an exact planar solution bundle");
  for (auto* s : {kc, sp, rx, vf, mf}) add_common(s);
  rx->add_option("--init", init, "Initial data: tilt, perturbed or file")
      ->check(CLI::IsMember({"tilt", "perturbed", "file"}));
  rx->add_option("--a", a, "Tilt slope");
  mf->add_option("--a", a, "Slope");
  vf->add_option("--bundle", bundle, "Bundle directory")->required();

  std::vector<std::string> rev(args.rbegin(), args.rend());
  if (!rev.empty()) rev.pop_back();
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kPass;
  } catch (const CLI::ParseError& e) {
    err << e.what() << '\n';
    return kConfigError;
  }

  try {
    ConfigMap map = config_path.empty() ? ConfigMap{} : ConfigMap::load(config_path);
    map.apply_env(RunConfig::known_keys());
    if (!out_dir.empty()) map.set("output.dir", out_dir);
    if (seed >= 0) map.set("seed", std::to_string(seed));
    if (threads > 0) map.set("threads", std::to_string(threads));
    if (!init.empty()) map.set("init.kind", init);
    if (!std::isnan(a)) map.set("init.a", format_double(a));
    const RunConfig cfg = RunConfig::from_map(map);
    set_num_threads(cfg.threads);

    if (*kc) return cmd_kernel_check(cfg, out);
    if (*sp) return cmd_solve_profile(cfg, out);
    if (*rx) return cmd_relax2d(cfg, out);
    if (*vf) return cmd_verify(cfg, bundle, out);
    return cmd_manufacture(cfg, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const IoError& e) {
    err << "input error: " << e.what() << '\n';
    return kConfigError;
  } catch (const SolverError& e) {
    err << "solver error: " << e.what() << '\n';
    return kNumericalFail;
  } catch (const DomainError& e) {
    err << "hypothesis violated: " << e.what() << '\n';
    return kHypothesisViolated;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kNumericalFail;
  }
}

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  return run(std::vector<std::string>(argv, argv + argc), out, err);
}

}  // namespace nlsym::cli
