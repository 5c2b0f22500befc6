#include "latcor/direct.hpp"
#include "latcor/inference.hpp"
#include "latcor/moments.hpp"
#include "latcor/rng.hpp"
#include "latcor/shrinkage.hpp"
#include "latcor/simulate.hpp"

#include <benchmark/benchmark.h>

#include <map>
#include <memory>
#include <tuple>

using namespace latcor;

namespace {

struct Problem {
  GroundTruth truth;
  UniqueSets sets;
  SampleMatrix data;
  CrossProducts c;
};

// benchmark functions re-enter; build each problem shape once
const Problem& problem(int p, int q, int unique, int n) {
  static std::map<std::tuple<int, int, int, int>, std::unique_ptr<Problem>> cache;
  auto key = std::make_tuple(p, q, unique, n);
  auto it = cache.find(key);
  if (it == cache.end()) {
    GroundTruth truth = generate_truth(p, q, unique, 0.7, 0.2, 0.5, 30.0, 7777);
    UniqueSets sets = derive_unique_sets(truth.map);
    SampleMatrix data = generate_data(truth, n, 0.3, 7778);
    CrossProducts c = cross_products(data);
    auto owned = std::make_unique<Problem>(
        Problem{std::move(truth), std::move(sets), std::move(data), std::move(c)});
    it = cache.emplace(key, std::move(owned)).first;
  }
  return *it->second;
}

void BM_CrossProducts(benchmark::State& state) {
  const Problem& pb = problem(50, static_cast<int>(state.range(0)), 5, 200);
  for (auto _ : state) {
    CrossProducts c = cross_products(pb.data);
    benchmark::DoNotOptimize(c.c_hat.data());
  }
}
BENCHMARK(BM_CrossProducts)->Arg(300)->Arg(1000)->Unit(benchmark::kMillisecond);

// one O(n) quadratic form per iteration, after the engine precomputation
void BM_QuadForm(benchmark::State& state) {
  const Problem& pb = problem(50, static_cast<int>(state.range(0)), 5, 200);
  QuadFormEngine engine(pb.data, pb.c, pb.sets);
  auto a = PairIndexSet::offdiag(0, 1);
  auto b = PairIndexSet::diag(0);
  for (auto _ : state) benchmark::DoNotOptimize(engine.quad_form(a, b));
}
BENCHMARK(BM_QuadForm)->Arg(300)->Arg(3000)->Unit(benchmark::kMicrosecond);

void BM_AllPairsInference(benchmark::State& state) {
  const Problem& pb = problem(static_cast<int>(state.range(0)),
                              static_cast<int>(state.range(1)),
                              static_cast<int>(state.range(2)),
                              static_cast<int>(state.range(3)));
  for (auto _ : state) {
    CrossProducts c = cross_products(pb.data);
    CovEstimate cov = direct_estimate(c, pb.sets);
    QuadFormEngine engine(pb.data, c, pb.sets);
    InferenceTable table = infer_all(engine, cov, 0.1);
    benchmark::DoNotOptimize(table.pairs.data());
  }
}
// desk scale, proteomics scale, and the pathway-database stretch scale
BENCHMARK(BM_AllPairsInference)
    ->Args({20, 150, 5, 200})
    ->Args({175, 1031, 5, 227})
    ->Args({109, 2787, 14, 278})
    ->Unit(benchmark::kMillisecond);

void BM_ShrinkageWithCv(benchmark::State& state) {
  const Problem& pb = problem(50, 300, 5, 30);
  CovEstimate cov = direct_estimate(pb.c, pb.sets);
  for (auto _ : state) {
    CvReport cv = cross_validate_kappa(pb.data, pb.sets, default_kappa_grid(), 20, 0.5, 5);
    QuadFormEngine engine(pb.data, pb.c, pb.sets);
    ShrinkageResult result = shrink_with_kappa(engine, cov, cv.chosen_kappa);
    benchmark::DoNotOptimize(result.rho);
  }
}
BENCHMARK(BM_ShrinkageWithCv)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
