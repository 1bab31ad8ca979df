#pragma once

#include <functional>
#include <string>

namespace nlsym {

/// Reaction term f together with its derivative f'.
class Nonlinearity {
 public:
  Nonlinearity(std::string name, std::function<double(double)> f, std::function<double(double)> df)
      : name_(std::move(name)), f_(std::move(f)), df_(std::move(df)) {}

  /// f(u) = u - u^3.
  static Nonlinearity cubic();
  /// f(u) = theta (u - u^3). For 0 < theta < 1 the map u - f(u) is strictly
  /// increasing and monotone fronts are C^1; theta = 1 gives a cusp at u = 0.
  static Nonlinearity scaled_cubic(double theta);
  /// Resolves "cubic" or "scaled_cubic" (the latter reads theta).
  static Nonlinearity by_name(const std::string& name, double theta);

  const std::string& name() const { return name_; }
  double operator()(double u) const { return f_(u); }
  double deriv(double u) const { return df_(u); }

  /// max |f'| over [lo, hi], sampled on 2001 points.
  double max_abs_deriv(double lo = -1.0, double hi = 1.0) const;
  /// max f' over [lo, hi]; fronts of Lu = f(u) are C^1 when this is < 1.
  double max_deriv(double lo = -1.0, double hi = 1.0) const;
  /// f(-u) = -f(u) on sampled points of [-1, 1].
  bool is_odd() const;
  /// Largest relative gap between f' and a centered difference of f.
  double derivative_consistency(double lo = -1.5, double hi = 1.5) const;

 private:
  std::string name_;
  std::function<double(double)> f_;
  std::function<double(double)> df_;
};

}  // namespace nlsym
