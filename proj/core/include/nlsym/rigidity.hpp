#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "nlsym/grid.hpp"
#include "nlsym/nonlinearity.hpp"
#include "nlsym/operator.hpp"
#include "nlsym/solvers.hpp"

namespace nlsym {

/// Evaluation window {u2 >= eps_floor * max u2} minus the frozen band.
struct Window {
  std::vector<char> mask;
  std::size_t count = 0;
  double fraction = 0.0;  ///< count / grid size
  double eps_floor = 0.0;
  double threshold = 0.0;  ///< eps_floor * max u2

  bool contains(std::size_t i) const { return mask[i] != 0; }
};

/// Throws DomainError when the window is empty.
Window make_window(const SolutionBundle& bundle, double eps_floor);
/// Window over an arbitrary positive weight field (1D or 2D).
Window make_window(const Field& weight, double eps_floor, double frozen_band = 0.0);

struct Quotient {
  Field v;  ///< u1 / u2 on the window, 0 elsewhere
  Window window;
};

/// v = u1 / u2. Refuses non-monotone bundles (DomainError), as v is only
/// meaningful where u2 > 0.
Quotient compute_quotient(const SolutionBundle& bundle, double eps_floor);

/// Connected components of the window graph whose edges are stencil pairs.
struct Components {
  std::vector<int> label;  ///< -1 outside the window
  int count = 0;
};
Components window_components(const OperatorContext& ctx, const Window& w);

struct Cutoff {
  double R = 0.0;
  Field tau;
  double grad_bound = 15.0 / 8.0;  ///< |grad tau| <= grad_bound / R
  double measured_grad = 0.0;      ///< max centred-difference gradient times R
};

/// tau(x) = S(clamp((2R - |x|)/R, 0, 1)), S(t) = 6t^5 - 15t^4 + 10t^3, balls
/// centred at the coordinate origin. Throws ConfigError when 2R exceeds the
/// half-width of an axis.
Cutoff build_cutoff(const Grid& grid, double R);

/// Pairs (x, y) of stencil neighbours with x or y in B_2R and not both in B_R.
class PairRegion {
 public:
  PairRegion(const Grid& grid, double R);
  double R() const { return R_; }
  bool contains(std::size_t x, std::size_t y) const;

 private:
  std::vector<double> r2_;  // |x|^2 per grid point
  double R_;
};

/// Number of ordered stencil pairs in the region over the whole grid.
std::size_t region_pair_count(const OperatorContext& ctx, const PairRegion& region);

double compute_J1(const OperatorContext& ctx, const SolutionBundle& bundle, const Quotient& q, const Cutoff& cut);

struct J2Terms {
  double J2 = 0.0;
  double cs_a = 0.0;  ///< sum (dv)^2 (tau(x)+tau(y))^2 u2 u2 k
  double cs_b = 0.0;  ///< sum (dtau)^2 v(y)^2 u2 u2 k
  std::size_t pairs = 0;  ///< window pairs inside the region
};
J2Terms compute_J2(const OperatorContext& ctx, const SolutionBundle& bundle, const Quotient& q, const Cutoff& cut,
                   const PairRegion& region);

/// Region-restricted Dirichlet energy of v weighted by u2(x) u2(y).
double tail_energy(const OperatorContext& ctx, const SolutionBundle& bundle, const Quotient& q, const PairRegion& region);

/// Pieces of the rearranged identity over window pairs:
///   identity = sum dv (v tau^2)(x) - (v tau^2)(y)) u2 u2 k,
///   cross    = sum dv v(y) (tau^2(x) - tau^2(y)) u2 u2 k,
/// so that J1 + cross = identity. For exact solutions identity vanishes up to
/// window truncation and |cross| <= J2.
struct EnergySplit {
  double identity = 0.0;
  double cross = 0.0;
  double scale = 0.0;  ///< sum tau^2(x) u2 u2 k vol^2, the natural size of J1
};
EnergySplit energy_split(const OperatorContext& ctx, const SolutionBundle& bundle, const Quotient& q, const Cutoff& cut);

/// max over window points x of sup/inf of `positive` over grid points in B_radius(x).
double harnack_ratio(const Field& positive, double radius, const Window& window);
double harnack_ratio(const SolutionBundle& bundle, double radius, const Window& window);

struct Direction {
  double a = 0.0;
  double v_stddev = 0.0;
  std::array<double, 2> omega{0.0, 1.0};
};
/// u2-weighted mean and standard deviation of v over the window.
Direction estimate_direction(const Field& v, const Field& u2, const Window& window);
/// Same, per connected component of the window.
std::vector<Direction> estimate_direction(const Field& v, const Field& u2, const Window& window, const Components& c);

/// Bins window points by s = omega.x (width min h), joins the bin means by
/// linear interpolation and returns max |u - fit| over the window.
double planarity_error(const Field& u, std::array<double, 2> omega, const Window& window);

/// ||L psi - f'(u) psi||_inf / ||psi||_inf over free points. DomainError if
/// psi <= 0 somewhere on the window.
double stability_residual(const OperatorContext& ctx, const Nonlinearity& f, const SolutionBundle& bundle,
                          const Field& psi, const Window& window);

struct VerifyOptions {
  std::vector<double> R_list{8.0, 16.0, 32.0};
  double eps_floor = 1e-6;
  double harnack_radius = 0.0;  ///< 0: kernel support radius
  double kappa = 10.0;
  double planarity_threshold = 1e-3;
};

struct RigidityReport {
  double R = 0.0;
  double J1 = 0.0;
  double J2 = 0.0;
  double cs_factor_a = 0.0;
  double cs_factor_b = 0.0;
  bool cs_holds = false;
  double identity = 0.0;
  double cross = 0.0;
  double energy_scale = 0.0;
  double slack = 0.0;
  double kappa_measured = 0.0;  ///< max(0, J1 - J2) / (residual_inf * scale)
  bool chain_holds = false;     ///< J1 <= J2 + slack
  std::size_t region_pair_count = 0;
  std::size_t window_pair_count = 0;
  double tail_energy = 0.0;
  double cutoff_grad = 0.0;

  static std::string csv_header();
  std::string csv_row() const;
};

struct VerifyResult {
  std::vector<RigidityReport> rows;
  double residual_inf = 0.0;
  double window_fraction = 0.0;
  std::size_t window_points = 0;
  int components = 0;
  std::vector<Direction> component_directions;
  Direction direction;
  double harnack_C = 0.0;
  double planarity_error_inf = 0.0;
  double stability_residual = 0.0;
  double region_growth_C = 0.0;  ///< max count(R) / R^2
  double max_count_ratio = 0.0;  ///< max count(2R)/count(R) over consecutive doublings
  bool tail_decreasing = false;
  bool cs_all = false;
  bool chain_all = false;
  bool planar = false;
  double kappa = 0.0;

  std::string to_text() const;
  std::string to_csv() const;
};

/// Runs the quotient, cutoff energies, region counts, Harnack ratio,
/// direction fit, planarity error and stability residual (psi = u2).
/// DomainError for non-monotone bundles.
VerifyResult verify_energy_chain(const OperatorContext& ctx, const Nonlinearity& f, const SolutionBundle& bundle,
                                 const VerifyOptions& opts);

}  // namespace nlsym
