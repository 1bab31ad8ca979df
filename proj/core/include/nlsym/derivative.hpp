#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "nlsym/grid.hpp"

namespace nlsym {

enum class DerivativeScheme {
  centered2,           ///< (u(x+h)-u(x-h))/(2h) with the axis boundary rule
  spectral,            ///< exact Fourier multiplier ik; periodic axes only
  spectral_detrended,  ///< clamp axes: Fourier multiplier on u minus a tanh background
};

std::string_view to_string(DerivativeScheme s);
DerivativeScheme derivative_scheme_from_string(std::string_view s);

/// spectral on periodic axes, centered2 on clamp axes.
DerivativeScheme default_scheme(const Grid& grid, int axis);

/// Discrete partial derivative along `axis`. Throws ConfigError when the
/// spectral scheme is requested on a clamp axis.
///
/// spectral_detrended assumes the field is flat at both ends of the axis
/// (front-like data); on a periodic axis it reduces to spectral.
Field partial_derivative(const Field& field, int axis, DerivativeScheme scheme);

/// Raw-span variant used by the operator and solver internals.
std::vector<double> differentiate(const Grid& grid, std::span<const double> u, int axis, DerivativeScheme scheme);

}  // namespace nlsym
