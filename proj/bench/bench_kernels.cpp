// Serial references against their OpenMP counterparts.

#include <benchmark/benchmark.h>

#include "prb/analysis.hpp"
#include "prb/filter.hpp"
#include "prb/linopt.hpp"

namespace {

prb::CMatrix random_matrix(int r, uint64_t seed) {
  prb::Rng rng = prb::stream_rng(seed, 0);
  std::normal_distribution<double> nd;
  prb::CMatrix A(r, r);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j) A(i, j) = {nd(rng), nd(rng)};
  return A;
}

void BM_PermanentSerial(benchmark::State& st) {
  const auto A = random_matrix(static_cast<int>(st.range(0)), 1);
  for (auto _ : st) benchmark::DoNotOptimize(prb::permanent(A));
}
void BM_PermanentParallel(benchmark::State& st) {
  const auto A = random_matrix(static_cast<int>(st.range(0)), 1);
  for (auto _ : st) benchmark::DoNotOptimize(prb::permanent_parallel(A));
}
BENCHMARK(BM_PermanentSerial)->Arg(12)->Arg(16)->Arg(20);
BENCHMARK(BM_PermanentParallel)->Arg(12)->Arg(16)->Arg(20);

prb::SimConfig bench_config(int n, int m, long shots) {
  prb::SimConfig c;
  c.n = n;
  c.m = m;
  c.input.assign(m, 0);
  for (int i = 0; i < n; ++i) c.input[i] = 1;
  c.lengths = {1, 4};
  c.shots = shots;
  c.seed = 7;
  return c;
}

void BM_Simulate(benchmark::State& st) {
  const auto cfg = bench_config(3, 3, 500);
  const auto exec = st.range(0) ? prb::Exec::Parallel : prb::Exec::Serial;
  for (auto _ : st) benchmark::DoNotOptimize(prb::simulate(cfg, exec));
}
BENCHMARK(BM_Simulate)->Arg(0)->Arg(1)->ArgNames({"parallel"});

void BM_FilterEstimate(benchmark::State& st) {
  const auto cfg = bench_config(3, 3, 500);
  const auto recs = prb::simulate(cfg);
  const auto ctx = prb::FilterContext::build(3, 3, cfg.input, {3});
  prb::FilterSpec spec;
  spec.k = 3;
  const auto exec = st.range(0) ? prb::Exec::Parallel : prb::Exec::Serial;
  for (auto _ : st) benchmark::DoNotOptimize(prb::estimate_signal(recs, spec, &ctx, 3, exec));
}
BENCHMARK(BM_FilterEstimate)->Arg(0)->Arg(1)->ArgNames({"parallel"});

void BM_SecondMoment(benchmark::State& st) {
  const auto exec = st.range(0) ? prb::Exec::Parallel : prb::Exec::Serial;
  (void)prb::second_moment(2, 3, 3, {1, 1, 1}, exec);
  for (auto _ : st) benchmark::DoNotOptimize(prb::second_moment(2, 3, 3, {1, 1, 1}, exec));
}
BENCHMARK(BM_SecondMoment)->Arg(0)->Arg(1)->ArgNames({"parallel"});

}  // namespace

BENCHMARK_MAIN();
