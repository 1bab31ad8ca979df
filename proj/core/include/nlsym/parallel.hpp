#pragma once

#include <cstddef>
#include <functional>
#include <span>

namespace nlsym {

/// Worker count used by data-parallel loops (default 1). Results never
/// depend on it: reductions combine fixed row partials in row order.
void set_num_threads(int n);
int num_threads();

/// Runs body(begin, end) over a static partition of [0, n).
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

/// Sum of row(r) for r in [0, rows), each row summed sequentially by the
/// caller and the partials combined by pairwise summation.
double deterministic_sum(std::size_t rows, const std::function<double(std::size_t)>& row);

/// Pairwise (cascade) summation of a contiguous range.
double pairwise_sum(std::span<const double> xs);

}  // namespace nlsym
