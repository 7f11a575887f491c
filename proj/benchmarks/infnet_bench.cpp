#include <benchmark/benchmark.h>

#include "infnet/pipeline.hpp"

using namespace infnet;

static void BM_SymEig(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Mat a = Mat::Random(n, n);
  const Mat m = a * a.transpose();
  for (auto _ : state) benchmark::DoNotOptimize(sym_eig(m));
}
BENCHMARK(BM_SymEig)->Arg(3)->Arg(15)->Arg(60);

static void BM_Collect(benchmark::State& state) {
  const PipelineConfig cfg = preset(preset_names()[state.range(0)]);
  for (auto _ : state) benchmark::DoNotOptimize(run_collect(cfg));
  state.SetLabel(cfg.name);
}
BENCHMARK(BM_Collect)->DenseRange(0, 5)->Unit(benchmark::kMillisecond);

static void BM_Synthesize(benchmark::State& state) {
  const PipelineConfig cfg = preset(preset_names()[state.range(0)]);
  const CollectOutput data = run_collect(cfg);
  const SynthesisProblem prob = make_problem(cfg, data.record, data.card);
  for (auto _ : state) benchmark::DoNotOptimize(synthesize(prob));
  state.SetLabel(cfg.name);
}
// certified presets only; the academic ones run to the iteration cap
BENCHMARK(BM_Synthesize)->DenseRange(0, 3)->Unit(benchmark::kMillisecond)->Iterations(3);

BENCHMARK_MAIN();
