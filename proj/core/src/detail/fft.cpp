#include "detail/fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <cstring>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <tuple>

namespace nlsym::detail {
namespace {

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};
using RealBuf = std::unique_ptr<double, FftwFree>;
using CplxBuf = std::unique_ptr<fftw_complex, FftwFree>;

struct Plans {
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
};

using Key = std::tuple<std::size_t, std::size_t, std::size_t>;  // rank, n0, n1

std::mutex g_mutex;
std::map<Key, Plans>& cache() {
  static std::map<Key, Plans> plans;
  return plans;
}

std::size_t real_size(std::span<const std::size_t> shape) {
  std::size_t s = 1;
  for (auto n : shape) s *= n;
  return s;
}

std::size_t complex_size(std::span<const std::size_t> shape) {
  if (shape.size() == 1) return shape[0] / 2 + 1;
  return shape[0] * (shape[1] / 2 + 1);
}

const Plans& plans_for(std::span<const std::size_t> shape) {
  if (shape.empty() || shape.size() > 2) throw std::invalid_argument("rfft supports rank 1 or 2");
  const Key key{shape.size(), shape[0], shape.size() == 2 ? shape[1] : 0};
  std::lock_guard lock(g_mutex);
  auto it = cache().find(key);
  if (it != cache().end()) return it->second;

  RealBuf r(static_cast<double*>(fftw_malloc(sizeof(double) * real_size(shape))));
  CplxBuf c(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * complex_size(shape))));
  Plans p;
  const unsigned flags = FFTW_ESTIMATE;
  if (shape.size() == 1) {
    const int n = static_cast<int>(shape[0]);
    p.forward = fftw_plan_dft_r2c_1d(n, r.get(), c.get(), flags);
    p.backward = fftw_plan_dft_c2r_1d(n, c.get(), r.get(), flags);
  } else {
    const int n0 = static_cast<int>(shape[0]);
    const int n1 = static_cast<int>(shape[1]);
    p.forward = fftw_plan_dft_r2c_2d(n0, n1, r.get(), c.get(), flags);
    p.backward = fftw_plan_dft_c2r_2d(n0, n1, c.get(), r.get(), flags);
  }
  if (!p.forward || !p.backward) throw std::runtime_error("FFTW planning failed");
  return cache().emplace(key, p).first->second;
}

}  // namespace

Spectrum rfft(std::span<const double> in, std::span<const std::size_t> shape) {
  const Plans& p = plans_for(shape);
  const std::size_t nr = real_size(shape);
  const std::size_t nc = complex_size(shape);
  RealBuf r(static_cast<double*>(fftw_malloc(sizeof(double) * nr)));
  CplxBuf c(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * nc)));
  std::memcpy(r.get(), in.data(), sizeof(double) * nr);
  fftw_execute_dft_r2c(p.forward, r.get(), c.get());
  Spectrum out(nc);
  for (std::size_t k = 0; k < nc; ++k) out[k] = {c.get()[k][0], c.get()[k][1]};
  return out;
}

std::vector<double> irfft(const Spectrum& in, std::span<const std::size_t> shape) {
  const Plans& p = plans_for(shape);
  const std::size_t nr = real_size(shape);
  const std::size_t nc = complex_size(shape);
  if (in.size() != nc) throw std::invalid_argument("spectrum size does not match shape");
  RealBuf r(static_cast<double*>(fftw_malloc(sizeof(double) * nr)));
  CplxBuf c(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * nc)));
  for (std::size_t k = 0; k < nc; ++k) {
    c.get()[k][0] = in[k].real();
    c.get()[k][1] = in[k].imag();
  }
  fftw_execute_dft_c2r(p.backward, c.get(), r.get());
  std::vector<double> out(r.get(), r.get() + nr);
  const double scale = 1.0 / static_cast<double>(nr);
  for (double& x : out) x *= scale;
  return out;
}

double wavenumber(std::size_t k, std::size_t n, double h, bool odd) {
  const double L = static_cast<double>(n) * h;
  if (odd && n % 2 == 0 && k == n / 2) return 0.0;
  const auto kk = static_cast<std::ptrdiff_t>(k);
  const auto nn = static_cast<std::ptrdiff_t>(n);
  const std::ptrdiff_t signed_k = kk <= nn / 2 ? kk : kk - nn;
  return 2.0 * std::numbers::pi * static_cast<double>(signed_k) / L;
}

}  // namespace nlsym::detail
