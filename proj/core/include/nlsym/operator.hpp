#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "nlsym/derivative.hpp"
#include "nlsym/grid.hpp"
#include "nlsym/kernel.hpp"

namespace nlsym {

enum class OperatorMethod { direct, fft };

std::string_view to_string(OperatorMethod m);

/// Kernel + grid pairing on which L u = u - k*u is evaluated.
class OperatorContext {
 public:
  /// Throws ConfigError on a dimension or spacing mismatch, or when the fft
  /// method is requested on a grid with a clamp axis.
  OperatorContext(DiscreteKernel kernel, Grid grid, OperatorMethod method = OperatorMethod::direct);

  const DiscreteKernel& kernel() const { return kernel_; }
  const Grid& grid() const { return grid_; }
  OperatorMethod method() const { return method_; }

  /// Same kernel and grid with a different evaluation method.
  OperatorContext with_method(OperatorMethod m) const { return OperatorContext(kernel_, grid_, m); }

  struct Spectral;

 private:
  DiscreteKernel kernel_;
  Grid grid_;
  OperatorMethod method_;
  std::shared_ptr<const Spectral> spectral_;

  friend std::vector<double> apply_L(const OperatorContext&, std::span<const double>);
};

/// x -> sum_d m(d) (u(x) - u(x - d)) with m the tap masses. Exterior samples
/// follow the grid's boundary rule.
Field apply_L(const OperatorContext& ctx, const Field& u);
std::vector<double> apply_L(const OperatorContext& ctx, std::span<const double> u);

/// Optional restriction of a pair sum; arguments are the flat indices of x
/// and y = x - d.
using PairMask = std::function<bool(std::size_t x, std::size_t y)>;

/// sum over x of vol * sum_d m(d) term(x, y, m(d)) with y = x - d. Periodic axes wrap;
/// on clamp axes pairs with y outside the grid are skipped. Reduction order is
/// fixed (row partials, pairwise combination), independent of the thread count.
double pair_sum(const OperatorContext& ctx, const std::function<double(std::size_t x, std::size_t y, double m)>& term);

/// Several pair sums in one sweep: term adds into acc[0..k). Same ordering
/// guarantees as pair_sum.
std::vector<double> pair_sums(const OperatorContext& ctx, std::size_t k,
                              const std::function<void(std::size_t x, std::size_t y, double m, double* acc)>& term);

/// Sequential visit of the same pairs (for stateful visitors).
void for_each_pair(const OperatorContext& ctx, const std::function<void(std::size_t x, std::size_t y, double m)>& visit);

/// sum_{x,y} (f(x)-f(y)) (g(x)-g(y)) k(x-y) vol^2 over in-grid stencil pairs.
double dirichlet_form(const OperatorContext& ctx, const Field& f, const Field& g, const PairMask& mask = {});

struct R1Report {
  std::size_t trials = 0;
  double max_rel_discrepancy = 0.0;
  bool boundary_remainder_regime = false;  ///< clamp grid: g vanishes within R0 of clamp edges
  bool passed = false;
  std::string to_text() const;
};

/// Compares dirichlet_form(f, g) with 2 sum L f g vol for random pairs.
R1Report check_R1(const OperatorContext& ctx, std::size_t trials, std::uint64_t seed);

/// max_i ||d_i(L u) - L(d_i u)||_inf / ||u||_inf over points at least `band`
/// away from every clamp edge (band 0: all points). Default schemes per axis.
double check_commutation(const OperatorContext& ctx, const Field& u, double band = 0.0);
double check_commutation(const OperatorContext& ctx, const Field& u, const std::vector<DerivativeScheme>& schemes,
                         double band = 0.0);

}  // namespace nlsym
