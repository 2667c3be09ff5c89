#include <benchmark/benchmark.h>

#include "mlr/simulator.hpp"

namespace {

void BM_Sense(benchmark::State& state) {
  const auto world = mlr::sim::default_world();
  mlr::sim::RobotState s;
  s.pose = world.start;
  for (auto _ : state) benchmark::DoNotOptimize(mlr::sim::sense(world, s));
}
BENCHMARK(BM_Sense)->Unit(benchmark::kMicrosecond);

void BM_TeacherTick(benchmark::State& state) {
  const auto world = mlr::sim::default_world();
  mlr::sim::RobotState s;
  s.pose = world.start;
  for (auto _ : state) {
    s = mlr::sim::step(world, s, mlr::sim::teacher_policy(mlr::sim::sense(world, s)), 0.1);
  }
}
BENCHMARK(BM_TeacherTick)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
