#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace nlsym {

enum class KernelFamily {
  ball_indicator,  ///< constant on B_{R0}
  smooth_bump,     ///< 1 on B_{r0}, quintic smoothstep decay to 0 at R0
  annular_mix,     ///< 1 on B_{r0}, shell_weight on the annulus r0 < |z| <= R0
};

std::string_view to_string(KernelFamily f);
KernelFamily kernel_family_from_string(std::string_view s);

/// Radial kernel k with m0 chi_{B_r0} <= k <= M0 chi_{B_R0} and unit mass.
struct KernelSpec {
  KernelFamily family = KernelFamily::ball_indicator;
  double r0 = 1.0;
  double R0 = 1.0;
  double m0 = 0.0;
  double M0 = 0.0;
  int dim = 2;
  double shell_weight = 0.5;  // annular_mix only

  /// Throws SpecError unless 0 < r0 <= R0, 0 < m0 <= M0 and dim is 1 or 2.
  void validate() const;

  /// Unnormalized radial profile, equal to 1 on B_{r0}.
  double profile(double rho) const;
  /// Integral of profile over R^dim, in closed form.
  double continuum_mass() const;
  /// Continuum density on B_{r0} (= 1 / continuum_mass()).
  double plateau_density() const { return 1.0 / continuum_mass(); }

  /// Spec with m0 = M0 bracketing exactly the continuum plateau density.
  static KernelSpec tight(KernelFamily family, double r0, double R0, int dim);
};

struct KernelTap {
  std::array<int, 2> offset{0, 0};  ///< lattice offset (second entry 0 in 1D)
  double weight = 0.0;              ///< kernel density k at the offset
};

/// Stencil form of k on a lattice. mass(t) = weight * cell volume is the
/// quadrature weight used by the operator.
class DiscreteKernel {
 public:
  DiscreteKernel() = default;
  DiscreteKernel(int dim, std::array<double, 2> spacing, std::vector<KernelTap> taps, double quadrature_slack = 0.0);

  int dim() const { return dim_; }
  const std::array<double, 2>& spacing() const { return spacing_; }
  const std::vector<KernelTap>& taps() const { return taps_; }
  double cell_volume() const { return dim_ == 1 ? spacing_[0] : spacing_[0] * spacing_[1]; }
  double mass(const KernelTap& t) const { return t.weight * cell_volume(); }
  /// Sum of weight * cell volume (pairwise summation).
  double total_weight() const;
  /// Largest |offset * h| among taps with nonzero weight.
  double support_radius() const;
  /// Relative gap between the discrete and continuum normalizations.
  double quadrature_slack() const { return slack_; }
  double offset_length(const KernelTap& t) const;
  std::array<double, 2> offset_vector(const KernelTap& t) const;

 private:
  int dim_ = 1;
  std::array<double, 2> spacing_{1.0, 1.0};
  std::vector<KernelTap> taps_;
  double slack_ = 0.0;
};

/// Midpoint sampling of spec.profile at lattice offsets, symmetrized and
/// renormalized to unit discrete mass. Requires h <= r0/2 on every axis.
DiscreteKernel build_kernel(const KernelSpec& spec, std::span<const double> h);

struct ValidationReport {
  double evenness_defect = 0.0;
  std::array<int, 2> evenness_offender{0, 0};
  double normalization_defect = 0.0;
  double min_inner_density = 0.0;  ///< over lattice offsets with |d| <= r0 - h
  double lower_bound = 0.0;        ///< m0 (1 - q)
  double max_density = 0.0;
  double upper_bound = 0.0;  ///< M0 (1 + q)
  double support_radius = 0.0;
  std::array<int, 2> support_offender{0, 0};
  double quadrature_slack = 0.0;
  bool even = false;
  bool normalized = false;
  bool nonnegative = false;
  bool lower = false;
  bool upper = false;
  bool support = false;

  bool passed() const { return even && normalized && nonnegative && lower && upper && support; }
  /// key=value lines.
  std::string to_text() const;
};

ValidationReport validate_kernel(const DiscreteKernel& k, const KernelSpec& spec);

/// Projection of a 2D stencil on the line spanned by (p, q) (integers, q > 0,
/// gcd 1): the 1D lattice kernel whose planar extensions u(x) = P(w.x) solve
/// the same discrete equation. Needs equal spacings unless p == 0.
DiscreteKernel project_kernel(const DiscreteKernel& k2, int p, int q);

/// CSV with header `offset_x,offset_y,weight`, offsets in length units.
void write_kernel_csv(const DiscreteKernel& k, const std::filesystem::path& path);
DiscreteKernel read_kernel_csv(const std::filesystem::path& path, int dim, std::array<double, 2> spacing);

}  // namespace nlsym
