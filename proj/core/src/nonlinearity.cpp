#include "nlsym/nonlinearity.hpp"

#include <algorithm>
#include <cmath>

#include "nlsym/error.hpp"

namespace nlsym {

Nonlinearity Nonlinearity::cubic() {
  return Nonlinearity("cubic", [](double u) { return u - u * u * u; }, [](double u) { return 1.0 - 3.0 * u * u; });
}

Nonlinearity Nonlinearity::scaled_cubic(double theta) {
  if (!(theta > 0.0) || !std::isfinite(theta)) throw ConfigError("scaled_cubic needs theta > 0");
  return Nonlinearity(
      "scaled_cubic", [theta](double u) { return theta * (u - u * u * u); },
      [theta](double u) { return theta * (1.0 - 3.0 * u * u); });
}

Nonlinearity Nonlinearity::by_name(const std::string& name, double theta) {
  if (name == "cubic") return cubic();
  if (name == "scaled_cubic") return scaled_cubic(theta);
  throw ConfigError("unknown nonlinearity '" + name + "'");
}

double Nonlinearity::max_abs_deriv(double lo, double hi) const {
  double m = 0.0;
  for (int i = 0; i <= 2000; ++i) m = std::max(m, std::abs(deriv(lo + (hi - lo) * i / 2000.0)));
  return m;
}

double Nonlinearity::max_deriv(double lo, double hi) const {
  double m = -INFINITY;
  for (int i = 0; i <= 2000; ++i) m = std::max(m, deriv(lo + (hi - lo) * i / 2000.0));
  return m;
}

bool Nonlinearity::is_odd() const {
  for (int i = 0; i <= 200; ++i) {
    const double u = i / 200.0;
    const double a = (*this)(u);
    const double b = (*this)(-u);
    if (std::abs(a + b) > 1e-14 * (1.0 + std::abs(a))) return false;
  }
  return true;
}

double Nonlinearity::derivative_consistency(double lo, double hi) const {
  double worst = 0.0;
  for (int i = 0; i <= 400; ++i) {
    const double u = lo + (hi - lo) * i / 400.0;
    const double eps = 1e-5 * std::max(1.0, std::abs(u));
    const double fd = ((*this)(u + eps) - (*this)(u - eps)) / (2.0 * eps);
    const double d = deriv(u);
    worst = std::max(worst, std::abs(fd - d) / std::max(1.0, std::abs(d)));
  }
  return worst;
}

}  // namespace nlsym
