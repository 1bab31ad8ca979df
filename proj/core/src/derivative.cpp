#include "nlsym/derivative.hpp"

#include <cmath>
#include <complex>

#include "detail/fft.hpp"
#include "nlsym/error.hpp"

namespace nlsym {
namespace {

struct Line {
  std::size_t count;   // number of lines
  std::size_t length;  // samples per line
  std::size_t stride;  // distance between consecutive samples
  std::size_t step;    // distance between first samples of consecutive lines
};

Line line_layout(const Grid& g, int axis) {
  if (g.dim() == 1) return {1, g.axis(0).n, 1, 0};
  const std::size_t n0 = g.axis(0).n;
  const std::size_t n1 = g.axis(1).n;
  if (axis == 0) return {n1, n0, n1, 1};
  return {n0, n1, 1, n1};
}

void spectral_line(std::vector<double>& line, double h, double* out) {
  const std::size_t n = line.size();
  // Shifting by the first sample makes constant lines map to an exact zero.
  const double ref = line[0];
  for (double& x : line) x -= ref;
  const std::size_t shape[1] = {n};
  auto spec = detail::rfft(line, shape);
  for (std::size_t k = 0; k < spec.size(); ++k)
    spec[k] *= std::complex<double>(0.0, detail::wavenumber(k, n, h, true));
  const auto d = detail::irfft(spec, shape);
  for (std::size_t i = 0; i < n; ++i) out[i] = d[i];
}

}  // namespace

std::string_view to_string(DerivativeScheme s) {
  switch (s) {
    case DerivativeScheme::centered2:
      return "centered2";
    case DerivativeScheme::spectral:
      return "spectral";
    case DerivativeScheme::spectral_detrended:
      return "spectral_detrended";
  }
  return "centered2";
}

DerivativeScheme derivative_scheme_from_string(std::string_view s) {
  if (s == "centered2") return DerivativeScheme::centered2;
  if (s == "spectral") return DerivativeScheme::spectral;
  if (s == "spectral_detrended") return DerivativeScheme::spectral_detrended;
  throw ConfigError("unknown derivative scheme '" + std::string(s) + "'");
}

DerivativeScheme default_scheme(const Grid& grid, int axis) {
  return grid.axis(axis).boundary == Boundary::periodic ? DerivativeScheme::spectral : DerivativeScheme::centered2;
}

std::vector<double> differentiate(const Grid& grid, std::span<const double> u, int axis, DerivativeScheme scheme) {
  if (axis < 0 || axis >= grid.dim()) throw ConfigError("derivative axis out of range");
  const Axis& ax = grid.axis(axis);
  if (scheme == DerivativeScheme::spectral && ax.boundary != Boundary::periodic)
    throw ConfigError("spectral derivative requires a periodic axis");
  if (scheme == DerivativeScheme::spectral_detrended && ax.boundary == Boundary::periodic)
    scheme = DerivativeScheme::spectral;

  std::vector<double> out(u.size());
  const Line lay = line_layout(grid, axis);
  std::vector<double> line(lay.length);
  std::vector<double> dline(lay.length);
  const auto n = static_cast<std::ptrdiff_t>(lay.length);

  for (std::size_t l = 0; l < lay.count; ++l) {
    const std::size_t base = l * lay.step;
    for (std::size_t i = 0; i < lay.length; ++i) line[i] = u[base + i * lay.stride];

    switch (scheme) {
      case DerivativeScheme::centered2: {
        const double inv = 0.5 / ax.h;
        for (std::ptrdiff_t i = 0; i < n; ++i)
          dline[static_cast<std::size_t>(i)] = (line[ax.resolve(i + 1)] - line[ax.resolve(i - 1)]) * inv;
        break;
      }
      case DerivativeScheme::spectral:
        spectral_line(line, ax.h, dline.data());
        break;
      case DerivativeScheme::spectral_detrended: {
        const double lo = line.front();
        const double hi = line.back();
        const double mid = 0.5 * (lo + hi);
        const double half = 0.5 * (hi - lo);
        const double H = 0.5 * static_cast<double>(lay.length - 1) * ax.h;
        const double centre = ax.origin + H;
        const double ell = H / 20.0;
        const double norm = 1.0 / std::tanh(H / ell);
        std::vector<double> bprime(lay.length);
        for (std::size_t i = 0; i < lay.length; ++i) {
          const double t = (ax.coord(static_cast<std::ptrdiff_t>(i)) - centre) / ell;
          const double th = std::tanh(t);
          line[i] -= mid + half * th * norm;
          bprime[i] = half * norm * (1.0 - th * th) / ell;
        }
        spectral_line(line, ax.h, dline.data());
        for (std::size_t i = 0; i < lay.length; ++i) dline[i] += bprime[i];
        break;
      }
    }
    for (std::size_t i = 0; i < lay.length; ++i) out[base + i * lay.stride] = dline[i];
  }
  return out;
}

Field partial_derivative(const Field& field, int axis, DerivativeScheme scheme) {
  return Field(field.grid(), differentiate(field.grid(), field.values(), axis, scheme));
}

}  // namespace nlsym
