#include <benchmark/benchmark.h>

#include <random>

#include "nlsym/kernel.hpp"
#include "nlsym/operator.hpp"
#include "nlsym/rigidity.hpp"
#include "nlsym/solvers.hpp"

using namespace nlsym;

namespace {

Grid periodic_square(std::size_t n, double h) {
  const double o = -0.5 * static_cast<double>(n) * h;
  return Grid::plane(Axis{n, h, o, Boundary::periodic}, Axis{n, h, o, Boundary::periodic});
}

Field random_field(const Grid& g, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  std::vector<double> v(g.size());
  for (auto& x : v) x = d(rng);
  return Field(g, std::move(v));
}

OperatorContext context(std::size_t n, double R0, OperatorMethod m) {
  const double h = 0.25;
  const double hs[2] = {h, h};
  return OperatorContext(build_kernel(KernelSpec::tight(KernelFamily::ball_indicator, R0, R0, 2), hs),
                         periodic_square(n, h), m);
}

void apply(benchmark::State& state, OperatorMethod m) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const double R0 = static_cast<double>(state.range(1));
  const auto ctx = context(n, R0, m);
  const Field u = random_field(ctx.grid(), 1);
  for (auto _ : state) benchmark::DoNotOptimize(apply_L(ctx, u));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(u.size()));
  state.counters["taps"] = static_cast<double>(ctx.kernel().taps().size());
}

void BM_apply_L_direct(benchmark::State& s) { apply(s, OperatorMethod::direct); }
void BM_apply_L_fft(benchmark::State& s) { apply(s, OperatorMethod::fft); }

void BM_dirichlet_form(benchmark::State& state) {
  const auto ctx = context(static_cast<std::size_t>(state.range(0)), 1.0, OperatorMethod::direct);
  const Field f = random_field(ctx.grid(), 2), g = random_field(ctx.grid(), 3);
  for (auto _ : state) benchmark::DoNotOptimize(dirichlet_form(ctx, f, g));
}

void BM_relax_step(benchmark::State& state) {
  const auto ctx = context(static_cast<std::size_t>(state.range(0)), 1.0, OperatorMethod::direct);
  const Field u0 = Field::sample(ctx.grid(), [](double x, double y) { return 0.9 * std::tanh(y) + 0.05 * std::sin(x); });
  RelaxOptions ro;
  ro.max_steps = 10;
  ro.tol = 1e-300;
  for (auto _ : state)
    benchmark::DoNotOptimize(relax_2d(ctx.kernel(), Nonlinearity::scaled_cubic(0.5), ctx.grid(), u0, ro));
}

}  // namespace

BENCHMARK(BM_apply_L_direct)->Args({64, 1})->Args({128, 1})->Args({256, 1})->Args({128, 4})->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_apply_L_fft)->Args({64, 1})->Args({128, 1})->Args({256, 1})->Args({128, 4})->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_dirichlet_form)->Arg(64)->Arg(128)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_relax_step)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
