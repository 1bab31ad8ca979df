#include "nlsym/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <thread>
#include <vector>

namespace nlsym {
namespace {
std::atomic<int> g_threads{1};
}

void set_num_threads(int n) { g_threads.store(std::max(1, n)); }
int num_threads() { return g_threads.load(); }

void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body) {
  const auto workers = static_cast<std::size_t>(num_threads());
  if (workers <= 1 || n < 2 * workers) {
    body(0, n);
    return;
  }
  const std::size_t chunk = (n + workers - 1) / workers;
  std::vector<std::jthread> pool;
  pool.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w) {
    const std::size_t b = w * chunk;
    const std::size_t e = std::min(n, b + chunk);
    if (b >= e) break;
    pool.emplace_back([&body, b, e] { body(b, e); });
  }
  body(0, std::min(n, chunk));
}

double pairwise_sum(std::span<const double> xs) {
  if (xs.size() <= 8) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s;
  }
  const std::size_t half = xs.size() / 2;
  return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

double deterministic_sum(std::size_t rows, const std::function<double(std::size_t)>& row) {
  std::vector<double> partial(rows, 0.0);
  parallel_for(rows, [&](std::size_t b, std::size_t e) {
    for (std::size_t r = b; r < e; ++r) partial[r] = row(r);
  });
  return pairwise_sum(partial);
}

}  // namespace nlsym
