#pragma once

// Thin RAII layer over FFTW's real-to-complex transforms. Plans are cached
// per shape behind a mutex (the FFTW planner is not thread-safe); execution
// uses the new-array interface on aligned scratch buffers.

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace nlsym::detail {

using Spectrum = std::vector<std::complex<double>>;

/// Forward r2c transform of a row-major real array with the given shape
/// (1 or 2 dims). Output has shape (n0, n1/2+1) or (n0/2+1) in 1D.
Spectrum rfft(std::span<const double> in, std::span<const std::size_t> shape);

/// Inverse of rfft, including the 1/N normalization.
std::vector<double> irfft(const Spectrum& in, std::span<const std::size_t> shape);

/// Angular wavenumber of FFT bin k on an axis with n points and spacing h.
/// The Nyquist bin of an even-length axis maps to 0 for odd-order operators
/// when `odd` is set.
double wavenumber(std::size_t k, std::size_t n, double h, bool odd);

}  // namespace nlsym::detail
