#include <benchmark/benchmark.h>

#include "rare_reach/cumulant.hpp"
#include "rare_reach/oracle.hpp"
#include "rare_reach/paths.hpp"
#include "rare_reach/queueing.hpp"
#include "rare_reach/restart.hpp"
#include "rare_reach/rng.hpp"

using namespace rare_reach;

static void BM_StreamUniform(benchmark::State& state) {
  Stream s(1, 2, 3);
  for (auto _ : state) benchmark::DoNotOptimize(s.uniform());
}
BENCHMARK(BM_StreamUniform);

static void BM_StreamNormal(benchmark::State& state) {
  Stream s(1, 2, 3);
  for (auto _ : state) benchmark::DoNotOptimize(s.normal());
}
BENCHMARK(BM_StreamNormal);

// Tilted walk passage over x; the walk drifts up at 0.1 per step.
static void BM_TiltedWalkPassage(benchmark::State& state) {
  const Model walk = TwoPoint{0.45};
  const double lambda = solveCramerRoot(walk);
  const double x = static_cast<double>(state.range(0));
  SimConfig cfg;
  Stream s(1, 2, 3);
  for (auto _ : state)
    benchmark::DoNotOptimize(simulateTiltedPassage(walk, lambda, x, 300.0 * x, cfg, s));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(x / 0.1));
}
BENCHMARK(BM_TiltedWalkPassage)->Arg(100)->Arg(1000);

static void BM_TiltedLevyPassage(benchmark::State& state) {
  const Model levy = LevyModel::exponentialJumpsExample();
  const double x = static_cast<double>(state.range(0));
  SimConfig cfg;
  Stream s(1, 2, 3);
  for (auto _ : state)
    benchmark::DoNotOptimize(simulateTiltedPassage(levy, 2.0, x, 15.0 * x, cfg, s));
}
BENCHMARK(BM_TiltedLevyPassage)->Arg(5)->Arg(20);

static void BM_BrownianQsdCycle(benchmark::State& state) {
  const Model bm = LevyModel::brownian(0.2);
  const BrownianQsd nu{0.2, 10.0};
  SimConfig cfg;
  Stream s(1, 2, 3);
  for (auto _ : state)
    benchmark::DoNotOptimize(simulateExit(bm, sampleRestart(nu, s), 10.0, cfg, s));
}
BENCHMARK(BM_BrownianQsdCycle);

static void BM_ExactWalkPassage(benchmark::State& state) {
  const int x = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(oracle::exactWalkPassage(0.45, x, 300 * x));
}
BENCHMARK(BM_ExactWalkPassage)->Arg(20)->Arg(100);

static void BM_QueuePath(benchmark::State& state) {
  const QueueConfig cfg;
  Stream s(1, 2, 3);
  for (auto _ : state) benchmark::DoNotOptimize(simulateQueue(cfg, 0, 1e4, s));
}
BENCHMARK(BM_QueuePath);

BENCHMARK_MAIN();
