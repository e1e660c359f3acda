#include <benchmark/benchmark.h>

#include "hardylab/czops.hpp"
#include "hardylab/maximal.hpp"
#include "hardylab/rng.hpp"
#include "hardylab/vexp.hpp"

using namespace hardylab;

namespace {

ScalarField noise(const Grid& g, std::uint64_t seed) {
  CounterRng rng(seed);
  ScalarField f(g);
  for (double& v : f.values) v = rng.normal();
  return f;
}

void BM_VnormVariable(benchmark::State& st) {
  const Grid g(1, int(st.range(0)), 4.0);
  const ExponentProfile p = ExponentProfile::realize(ExponentSpec::smooth_step(1, 2, 0.5), g);
  const ScalarField f = noise(g, 1);
  for (auto _ : st) benchmark::DoNotOptimize(vnorm(f, p));
}
BENCHMARK(BM_VnormVariable)->DenseRange(8, 12, 2);

void BM_HardyLittlewood(benchmark::State& st) {
  const Grid g(1, int(st.range(0)), 4.0);
  const MaximalCatalog cat(g);
  const ScalarField f = noise(g, 2);
  for (auto _ : st) benchmark::DoNotOptimize(hl_maximal(f, 1.0, cat));
}
BENCHMARK(BM_HardyLittlewood)->DenseRange(8, 10, 1)->Unit(benchmark::kMillisecond);

void BM_HilbertApply(benchmark::State& st) {
  const Grid g(1, int(st.range(0)), 4.0);
  const ScalarField s = noise(g, 3);
  VectorField f(g, 2);
  for (std::size_t i = 0; i < g.size(); ++i) f.at(i)[0] = f.at(i)[1] = s[i];
  const CZOperator T{make_kernel("hilbert")};
  for (auto _ : st) benchmark::DoNotOptimize(apply(T, f));
}
BENCHMARK(BM_HilbertApply)->DenseRange(8, 11, 1)->Unit(benchmark::kMillisecond);

void BM_GrandMaximal(benchmark::State& st) {
  const Grid g(1, int(st.range(0)), 4.0);
  const TestFunctionCatalog cat(1, 2);
  SuiteOptions o;
  o.count = 1;
  const VectorField f = moment_free_suite(g, 2, o)[0];
  const MatrixWeight W(WeightSpec::identity(2), g);
  MaximalParams P;
  for (auto _ : st) benchmark::DoNotOptimize(cb_maximal_weighted(f, P, cat, W));
}
BENCHMARK(BM_GrandMaximal)->DenseRange(8, 10, 1)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
