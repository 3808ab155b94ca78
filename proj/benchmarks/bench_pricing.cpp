#include <benchmark/benchmark.h>

#include <nlab/pricing.hpp>

using namespace nlab;

namespace {

CHParams base_params() {
  CHParams p;
  p.spot = 1.0;
  p.sigma = 0.2;
  p.horizon = 1.0;
  p.lambda1 = 0.05;
  p.lambda2 = 0.10;
  p.mu1 = p.mu2 = 0.05;
  return p;
}

}  // namespace

static void BM_ClosedForm(benchmark::State& state) {
  CHParams p = base_params();
  double k = 0.25;
  for (auto _ : state) {
    benchmark::DoNotOptimize(price_exchange_option(p, k));
    k = k < 4.0 ? k + 0.125 : 0.25;  // sweep strikes to defeat caching
  }
}
BENCHMARK(BM_ClosedForm);

static void BM_DecomposeAndParity(benchmark::State& state) {
  CHParams p = base_params();
  for (auto _ : state) {
    benchmark::DoNotOptimize(decompose_price(p, 1.0));
    benchmark::DoNotOptimize(parity_report(p, 1.0));
  }
}
BENCHMARK(BM_DecomposeAndParity);

static void BM_SimulatePaths(benchmark::State& state) {
  CHParams p = base_params();
  auto n = static_cast<std::uint64_t>(state.range(0));
  for (auto _ : state) {
    PathBatch b = simulate_paths(p, Leg::survival, n, 1, 42);
    benchmark::DoNotOptimize(b.terminal.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(n));
}
BENCHMARK(BM_SimulatePaths)->Arg(1 << 14)->Arg(1 << 16)->Arg(1 << 18);

static void BM_MCPrice(benchmark::State& state) {
  CHParams p = base_params();
  TwoCurrencyClaim call = exchange_call(1.0);
  auto n = static_cast<std::uint64_t>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(mc_price(p, call, n, 42));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(n));
}
BENCHMARK(BM_MCPrice)->Arg(1 << 14)->Arg(1 << 16)->Arg(1 << 18);

BENCHMARK_MAIN();
