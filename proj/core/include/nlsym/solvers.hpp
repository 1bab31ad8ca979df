#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "nlsym/derivative.hpp"
#include "nlsym/grid.hpp"
#include "nlsym/kernel.hpp"
#include "nlsym/nonlinearity.hpp"
#include "nlsym/operator.hpp"

namespace nlsym {

/// A field u together with its first derivatives and equation residual.
/// In 1D u2 is empty and u1 carries the monotone derivative.
struct SolutionBundle {
  Field u;
  Field u1;
  Field u2;
  double residual_inf = 0.0;  ///< ||L u - f(u)||_inf over the free (non-frozen) points
  bool monotone = false;
  double min_derivative = 0.0;  ///< min of the monotone derivative over free points
  double max_derivative = 0.0;
  double frozen_band = 0.0;   ///< width of the clamp-edge band held fixed (length units)
  std::string derivative;     ///< how u1/u2 were obtained, e.g. "spectral/centered2"
  bool fallback = false;      ///< Newton gave up and returned its input
  std::vector<double> history;
  std::vector<std::string> warnings;

  int dim() const { return u.grid().dim(); }
  const Field& monotone_derivative() const { return dim() == 1 ? u1 : u2; }
};

/// Relative tolerance of the monotone flag: min u' >= -tol * max u'.
inline constexpr double kMonotoneTolerance = 1e-6;

std::vector<double> equation_residual(const OperatorContext& ctx, const Nonlinearity& f, std::span<const double> u);
/// Max of |L u - f(u)| over points at least `frozen_band` from every clamp edge.
double residual_inf(const OperatorContext& ctx, const Nonlinearity& f, const Field& u, double frozen_band = 0.0);

/// Derivative schemes per axis; empty means default_scheme for each axis.
struct BundleOptions {
  std::vector<DerivativeScheme> schemes;
  double frozen_band = 0.0;
};

/// Differentiates u, evaluates the residual and the monotone flag.
SolutionBundle make_bundle(const OperatorContext& ctx, const Nonlinearity& f, Field u, const BundleOptions& opts = {});
/// Same with caller-provided derivatives.
SolutionBundle make_bundle(const OperatorContext& ctx, const Nonlinearity& f, Field u, Field u1, Field u2,
                           double frozen_band, std::string derivative);

struct NewtonOptions {
  double threshold = 1e-2;  ///< refuse to start above this residual
  double tol = 1e-10;       ///< stop once the residual is at or below this
  int max_steps = 12;
  int gmres_restart = 80;
  int gmres_max_iter = 4000;
  double forcing = 1e-10;  ///< relative GMRES tolerance per step (tight: keeps convergence quadratic)
  /// Restrict iterates to the symmetric subspace (see symmetry_projection);
  /// this removes the translation mode that makes J nearly singular.
  bool symmetric = false;
};

/// The reflection u(x) -> -u(-x) in 1D, or the glide u(x1, x2) -> -u(x1 + L/2, -x2)
/// in 2D (periodic x1 with an even point count), that an odd f and an even
/// kernel leave invariant. Returns false when the grid does not carry it.
bool symmetry_available(const Grid& grid);
/// Replaces x by (x + S x) / 2.
void symmetry_project(const Grid& grid, std::vector<double>& x);
/// max |x - S x| / 2.
double symmetry_defect(const Grid& grid, std::span<const double> x);

/// Matrix-free Newton on L u - f(u) = 0 (frozen points fixed). J dx = -r is
/// solved by restarted GMRES. On a start residual above the threshold, a
/// stagnating linear solve or a failed line search the input comes back with
/// fallback = true.
SolutionBundle newton_polish(const OperatorContext& ctx, const Nonlinearity& f, const SolutionBundle& in,
                             const NewtonOptions& opts = {}, const BundleOptions& bopts = {});

struct ProfileOptions {
  double tol = 1e-8;
  int max_iter = 20000;
  double lambda = 0.3;
  double tail_tol = 1e-4;
  double handoff = 1e-3;  ///< fixed-point residual at which Newton takes over
  double width = 2.0;     ///< initial guess tanh(x / width)
  bool odd_projection = true;  ///< used only when the grid is symmetric about 0 and f is odd
  DerivativeScheme scheme = DerivativeScheme::spectral_detrended;
  NewtonOptions newton{};
};

/// Monotone front of L u = f(u) on a 1D clamp grid (exterior values are the
/// clamped edge samples, driven to -1 and +1). Throws SolverError with the
/// residual history when tol is not met within max_iter iterations.
SolutionBundle solve_profile_1d(const DiscreteKernel& kernel, const Nonlinearity& f, const Grid& grid,
                                const ProfileOptions& opts = {});

struct RelaxOptions {
  double dt = 0.0;  ///< 0 selects 0.5 / (2 + max|f'| on [-1, 1])
  double tol = 1e-8;
  long max_steps = 200000;
  double handoff = 0.0;  ///< stop relaxing once the residual is at or below this (0: use tol)
  double frozen_band = 0.0;
  std::vector<DerivativeScheme> schemes;
};

/// Upper limit for a stable explicit step, 2 / (2 + max|f'| on [-1, 1]).
double relax_stability_bound(const Nonlinearity& f);

/// Explicit flow u <- u - dt (L u - f(u)) with points inside the frozen band
/// held at their initial values. Throws ConfigError when dt reaches the
/// stability bound. Loss of monotonicity is recorded in warnings.
SolutionBundle relax_2d(const DiscreteKernel& kernel, const Nonlinearity& f, const Grid& grid, const Field& u0,
                        const RelaxOptions& opts = {});

/// Rational slope a = p / q (q > 0, coprime). Throws ConfigError when no
/// fraction with q <= max_den reproduces a to 1e-12.
std::array<int, 2> rational_slope(double a, int max_den = 64);

/// Planar solution u(x) = P(w.x), w = (a, 1)/sqrt(a^2+1), exact on the
/// lattice: P solves the 1D equation for the kernel projected onto w. Points
/// within the kernel radius of a clamp edge form the frozen band.
SolutionBundle manufacture_planar(const DiscreteKernel& kernel, const Nonlinearity& f, const Grid& grid, double a,
                                  const ProfileOptions& opts = {});

enum class Envelope { sech, slope };
std::string_view to_string(Envelope e);
Envelope envelope_from_string(std::string_view s);

/// u0(x) = P(x2) + amp * sin(2 pi x1 / L) * E(x2) with E = sech(x2) or
/// P'(x2)/max P'. Requires a periodic x1 axis.
Field perturbed_initial(const SolutionBundle& profile, const Grid& grid, double amp, Envelope env);

/// Tilted planar guess P(w.x) sampled on the grid from a 1D profile
/// (linear interpolation in s, clamped outside the profile range).
Field tilted_initial(const SolutionBundle& profile, const Grid& grid, double a);

/// Bundle directory: u.nlrg, u1.nlrg, u2.nlrg (2D) and bundle.meta.
void save_bundle(const SolutionBundle& b, const std::filesystem::path& dir);
SolutionBundle load_bundle(const std::filesystem::path& dir);

/// CSV `iter,residual_inf`.
void write_history_csv(const std::vector<double>& history, const std::filesystem::path& path);

}  // namespace nlsym
