#include <benchmark/benchmark.h>

#include <random>
#include <string>
#include <vector>

#include <nlab/aggregation.hpp>
#include <nlab/deflator.hpp>
#include <nlab/tree.hpp>

using namespace nlab;

namespace {

// Deterministic all-alive market: basket prices follow an exact binary
// martingale (children b +- delta*v with equal weights), rates recovered as
// s_{i,j} = b_j / b_i. Big enough to time the tree walks, simple enough to
// need no test-only generator machinery.
struct Market {
  MarketTree tree;
  MeasureFamily family;
};

Market make_market(int d, int depth, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.5, 1.5);

  std::vector<RawNode> nodes;
  struct Pending {
    std::string id;
    int time;
    std::optional<std::string> parent;
    std::vector<double> b;
  };
  std::vector<double> b0(d);
  double tot = 0.0;
  for (double& x : b0) tot += (x = u(rng));
  for (double& x : b0) x /= tot;

  std::vector<Pending> frontier{{"n0", 0, {}, b0}};
  int serial = 0;
  while (!frontier.empty()) {
    std::vector<Pending> next;
    for (Pending& f : frontier) {
      RawMatrix m(d, std::vector<double>(d));
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) m[i][j] = f.b[j] / f.b[i];
      nodes.push_back({f.id, f.time, f.parent, std::move(m)});
      if (f.time == depth) continue;
      std::vector<double> v(d);
      double s = 0.0;
      for (int i = 0; i < d; ++i) s += (v[i] = u(rng));
      for (int i = 0; i < d; ++i) v[i] -= s / d;  // zero-sum direction
      double cap = 1.0;
      for (int i = 0; i < d; ++i)
        if (v[i] != 0.0) cap = std::min(cap, 0.4 * f.b[i] / std::abs(v[i]));
      for (int side : {-1, 1}) {
        Pending c;
        c.id = "n" + std::to_string(++serial);
        c.time = f.time + 1;
        c.parent = f.id;
        c.b.resize(d);
        for (int i = 0; i < d; ++i) c.b[i] = f.b[i] + side * cap * v[i];
        next.push_back(std::move(c));
      }
    }
    frontier = std::move(next);
  }

  Market mk{MarketTree::build(nodes), {}};
  int leaves = static_cast<int>(mk.tree.leaves().size());
  std::vector<double> w(leaves, 1.0 / leaves);  // the exact martingale weights
  ValuationMeasure q =
      ValuationMeasure::adopt(mk.tree, TreeMeasure::from_vector(mk.tree, w));
  mk.family = disaggregate(mk.tree, q);
  return mk;
}

}  // namespace

static void BM_CheckConsistency(benchmark::State& state) {
  Market m = make_market(static_cast<int>(state.range(0)),
                         static_cast<int>(state.range(1)), 7);
  for (auto _ : state) {
    benchmark::DoNotOptimize(check_consistency(m.tree, m.family));
  }
}
BENCHMARK(BM_CheckConsistency)->Args({2, 6})->Args({4, 6})->Args({4, 8});

static void BM_AggregateConsistent(benchmark::State& state) {
  Market m = make_market(static_cast<int>(state.range(0)),
                         static_cast<int>(state.range(1)), 7);
  for (auto _ : state) {
    benchmark::DoNotOptimize(aggregate_consistent(m.tree, m.family));
  }
}
BENCHMARK(BM_AggregateConsistent)->Args({2, 6})->Args({4, 6})->Args({4, 8});

static void BM_BuildDeflator(benchmark::State& state) {
  Market m = make_market(static_cast<int>(state.range(0)),
                         static_cast<int>(state.range(1)), 7);
  for (auto _ : state) {
    benchmark::DoNotOptimize(build_deflator(m.tree, m.family));
  }
}
BENCHMARK(BM_BuildDeflator)->Args({2, 6})->Args({4, 6})->Args({4, 8});

BENCHMARK_MAIN();
