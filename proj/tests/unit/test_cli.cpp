#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "commands.hpp"
#include "nlsym/error.hpp"
#include "nlsym/operator.hpp"
#include "nlsym/solvers.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using nlsym::cli::run;

namespace {

const fs::path kConfigs = NLSYM_CONFIG_DIR;

int cli(std::vector<std::string> args, std::string* out_text = nullptr) {
  args.insert(args.begin(), "nlsym");
  std::ostringstream out, err;
  const int code = run(args, out, err);
  if (out_text) *out_text = out.str() + err.str();
  return code;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path write_conf(const fs::path& dir, const std::string& name, const std::string& text) {
  const auto p = dir / name;
  std::ofstream(p) << text;
  return p;
}

const char* kSmallManufacture =
    "kernel.family = ball_indicator\nkernel.r0 = 1\nkernel.R0 = 1\n"
    "grid.dim = 2\ngrid.n1 = 97\ngrid.h1 = 0.5\ngrid.bc1 = clamp\n"
    "grid.n2 = 97\ngrid.h2 = 0.5\ngrid.bc2 = clamp\n"
    "nonlinearity.theta = 0.5\nsolver.scheme2 = centered2\ninit.a = 0.5\n"
    "rigidity.R_list = 4, 8\nrigidity.planarity_threshold = 1.25\n";

struct EnvGuard {
  std::string key;
  EnvGuard(const std::string& k, const std::string& v) : key(k) { setenv(k.c_str(), v.c_str(), 1); }
  ~EnvGuard() { unsetenv(key.c_str()); }
};

}  // namespace

TEST_CASE("kernel-check exit codes") {
  const auto dir = testing_support::scratch_dir("cli_kernel");
  CHECK(cli({"kernel-check", "--config", (kConfigs / "kernel_ball.conf").string(), "--out", (dir / "a").string()}) == 0);
  CHECK(fs::exists(dir / "a" / "kernel.csv"));
  CHECK(fs::exists(dir / "a" / "config.resolved"));

  // lopsided stencil read from file
  const auto csv = write_conf(dir, "bad.csv", "offset_x,offset_y,weight\n0.25,0,1.0\n-0.25,0,0.5\n0,0.25,1\n0,-0.25,1\n");
  const auto conf = write_conf(dir, "bad.conf", "grid.h1 = 0.25\ngrid.h2 = 0.25\nkernel.file = " + csv.string() + "\n");
  std::string text;
  CHECK(cli({"kernel-check", "--config", conf.string(), "--out", (dir / "b").string()}, &text) == 1);
  CHECK(text.find("FAIL") != std::string::npos);

  const auto inv = write_conf(dir, "inv.conf", "kernel.r0 = 2\nkernel.R0 = 1\n");
  CHECK(cli({"kernel-check", "--config", inv.string(), "--out", (dir / "c").string()}) == 2);
}

TEST_CASE("configuration errors") {
  const auto dir = testing_support::scratch_dir("cli_config");
  const auto unk = write_conf(dir, "unk.conf", "kernel.radius = 3\n");
  CHECK(cli({"kernel-check", "--config", unk.string(), "--out", dir.string()}) == 2);
  const auto bad = write_conf(dir, "num.conf", "grid.h1 = abc\n");
  CHECK(cli({"kernel-check", "--config", bad.string(), "--out", dir.string()}) == 2);
  CHECK(cli({"kernel-check", "--config", (dir / "missing.conf").string()}) == 2);
  CHECK(cli({"no-such-command"}) == 2);
  CHECK(cli({"verify", "--bundle", (dir / "nothing").string(), "--out", dir.string()}) == 2);
}

TEST_CASE("solve-profile success, iteration cap and env override") {
  const auto dir = testing_support::scratch_dir("cli_profile");
  std::string text;
  CHECK(cli({"solve-profile", "--config", (kConfigs / "profile.conf").string(), "--out", (dir / "ok").string()},
            &text) == 0);
  CHECK(text.find("monotone=true") != std::string::npos);
  CHECK(fs::exists(dir / "ok" / "profile.csv"));
  CHECK(fs::exists(dir / "ok" / "history.csv"));
  {
    EnvGuard g("NLSYM_SOLVER_MAX_ITER", "1");
    CHECK(cli({"solve-profile", "--config", (kConfigs / "profile.conf").string(), "--out", (dir / "cap").string()}) ==
          1);
    CHECK(slurp(dir / "cap" / "config.resolved").find("solver.max_iter = 1\n") != std::string::npos);
  }
  CHECK(fs::exists(dir / "cap" / "history.csv"));
}

TEST_CASE("relax2d on a tilted front and a bad time step") {
  const auto dir = testing_support::scratch_dir("cli_relax");
  std::string text;
  CHECK(cli({"relax2d", "--config", (kConfigs / "relax_tilt.conf").string(), "--out", (dir / "tilt").string()},
            &text) == 0);
  CHECK(fs::exists(dir / "tilt" / "bundle" / "bundle.meta"));
  CHECK(cli({"verify", "--config", (kConfigs / "relax_tilt.conf").string(), "--bundle",
             (dir / "tilt" / "bundle").string(), "--out", (dir / "tilt_v").string()}) == 0);

  EnvGuard g("NLSYM_SOLVER_DT", "10");
  CHECK(cli({"relax2d", "--config", (kConfigs / "relax_tilt.conf").string(), "--out", (dir / "dt").string()}) == 2);
}

TEST_CASE("verify exit codes on hand-made bundles") {
  const auto dir = testing_support::scratch_dir("cli_verify");
  const auto conf = write_conf(dir, "v.conf",
                               "grid.n1 = 65\ngrid.h1 = 0.25\ngrid.bc1 = clamp\ngrid.n2 = 65\ngrid.h2 = 0.25\n"
                               "grid.bc2 = clamp\nrigidity.R_list = 2, 4\n");
  const nlsym::Grid g =
      nlsym::Grid::plane(nlsym::Axis{65, 0.25, -8, nlsym::Boundary::clamp}, nlsym::Axis{65, 0.25, -8, nlsym::Boundary::clamp});
  const double hh[2] = {0.25, 0.25};
  const nlsym::OperatorContext ctx(
      nlsym::build_kernel(nlsym::KernelSpec::tight(nlsym::KernelFamily::ball_indicator, 1, 1, 2), hh), g);
  const auto f = nlsym::Nonlinearity::scaled_cubic(0.5);

  const auto osc = nlsym::make_bundle(ctx, f, nlsym::Field::sample(g, [](double x, double y) {
    return std::tanh(y) * std::cos(x);
  }));
  REQUIRE_FALSE(osc.monotone);
  nlsym::save_bundle(osc, dir / "osc");
  CHECK(cli({"verify", "--config", conf.string(), "--bundle", (dir / "osc").string(), "--out", (dir / "o").string()}) ==
        3);

  const auto wavy = nlsym::make_bundle(ctx, f, nlsym::Field::sample(g, [](double x, double y) {
    return std::tanh(y + 0.5 * std::sin(x));
  }));
  REQUIRE(wavy.monotone);
  nlsym::save_bundle(wavy, dir / "wavy");
  std::string text;
  CHECK(cli({"verify", "--config", conf.string(), "--bundle", (dir / "wavy").string(), "--out", (dir / "w").string()},
            &text) == 1);
  CHECK(text.find("planar=false") != std::string::npos);
}

TEST_CASE("manufacture, verify, determinism and round trip") {
  const auto dir = testing_support::scratch_dir("cli_manufacture");
  const auto conf = write_conf(dir, "m.conf", kSmallManufacture);
  for (const char* run_name : {"r1", "r2"}) {
    const auto out = dir / run_name;
    REQUIRE(cli({"manufacture", "--config", conf.string(), "--out", out.string(), "--seed", "7"}) == 0);
    CHECK(cli({"verify", "--config", conf.string(), "--bundle", (out / "bundle").string(), "--out",
               (out / "verify").string(), "--seed", "7"}) == 0);
  }
  for (const char* f : {"verify/report.csv", "verify/report.txt", "manufacture_report.txt", "config.resolved"})
    CHECK(slurp(dir / "r1" / f) == slurp(dir / "r2" / f));

  const auto b = nlsym::load_bundle(dir / "r1" / "bundle");
  nlsym::save_bundle(b, dir / "copy");
  const auto c = nlsym::load_bundle(dir / "copy");
  REQUIRE(b.u.size() == c.u.size());
  for (std::size_t i = 0; i < b.u.size(); ++i) {
    CHECK(b.u[i] == c.u[i]);
    CHECK(b.u2[i] == c.u2[i]);
  }
  CHECK(b.residual_inf == c.residual_inf);
  CHECK(b.monotone);
}
