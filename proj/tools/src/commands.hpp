#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "config.hpp"

namespace nlsym::cli {

enum ExitCode : int {
  kPass = 0,
  kNumericalFail = 1,
  kConfigError = 2,
  kHypothesisViolated = 3,
};

/// Builds the configured kernel (or reads kernel.file) and validates it.
/// Writes kernel_report.txt and kernel.csv.
int cmd_kernel_check(const RunConfig& cfg, std::ostream& log);

/// 1D front on grid axis 1 (1D config) or on the x2 axis with the projected
/// 2D kernel (2D config). Writes the profile bundle, profile.csv and history.csv.
int cmd_solve_profile(const RunConfig& cfg, std::ostream& log);

/// Relaxation from a tilted, perturbed or file initial field, then Newton.
/// Writes the bundle directory, history.csv and relax_report.txt.
int cmd_relax2d(const RunConfig& cfg, std::ostream& log);

/// Rigidity checks on a saved bundle. Writes report.csv and report.txt.
int cmd_verify(const RunConfig& cfg, const std::filesystem::path& bundle, std::ostream& log);

/// Exact planar lattice solution with slope init.a.
int cmd_manufacture(const RunConfig& cfg, std::ostream& log);

/// Full command line: subcommand, flags, config and environment overrides.
int run(int argc, char** argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace nlsym::cli
