#include <benchmark/benchmark.h>

#include <memory>

#include "escape/action_mask.h"
#include "escape/grid_planner.h"
#include "escape/lidar.h"
#include "escape/scenario.h"

namespace {

using namespace escape;

const Scenario& SharedScenario() {
  static const Scenario s =
      Generate(GeneratorConfig::ForClass(ScenarioClass::kNC), 7);
  return s;
}

const BoundaryTable& SharedTable() {
  static const BoundaryTable t = PrecomputeBoundaryTable(
      Footprint{}, BuildActionSpace(MotionLimits{}), LidarSpec{}, 0.2);
  return t;
}

void BM_SimulateScan(benchmark::State& state) {
  const Scenario& s = SharedScenario();
  const LidarSpec spec;
  for (auto _ : state) {
    benchmark::DoNotOptimize(SimulateScan(s.start, s.obstacles, spec));
  }
}
BENCHMARK(BM_SimulateScan);

void BM_ComputeMask(benchmark::State& state) {
  const Scenario& s = SharedScenario();
  const ScanFrame scan = SimulateScan(s.start, s.obstacles, LidarSpec{});
  const BoundaryTable& table = SharedTable();
  for (auto _ : state) benchmark::DoNotOptimize(ComputeMask(scan, table));
}
BENCHMARK(BM_ComputeMask);

void BM_BruteForceMask(benchmark::State& state) {
  const Scenario& s = SharedScenario();
  const DiscreteActionSet actions = BuildActionSpace(MotionLimits{});
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        BruteForceMask(Footprint{}, s.start, actions, s.obstacles, 0.2));
  }
}
BENCHMARK(BM_BruteForceMask)->Unit(benchmark::kMillisecond);

void BM_PrecomputeBoundaryTable(benchmark::State& state) {
  const DiscreteActionSet actions = BuildActionSpace(MotionLimits{});
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        PrecomputeBoundaryTable(Footprint{}, actions, LidarSpec{}, 0.2));
  }
}
BENCHMARK(BM_PrecomputeBoundaryTable)->Unit(benchmark::kMillisecond);

void BM_AStar(benchmark::State& state) {
  const Scenario& s = SharedScenario();
  GuidancePlanner planner(s.obstacles);
  const OccupancyGrid& grid = planner.Inflated(0.18);
  const Cell start = *grid.CellAt({s.start.x, s.start.y});
  const Cell goal = *grid.CellAt({s.goal.x, s.goal.y});
  for (auto _ : state) benchmark::DoNotOptimize(AStar(grid, start, goal));
}
BENCHMARK(BM_AStar)->Unit(benchmark::kMillisecond);

void BM_ClearanceField(benchmark::State& state) {
  const Scenario& s = SharedScenario();
  for (auto _ : state) {
    benchmark::DoNotOptimize(ClearanceField(s.obstacles, 0.02, 0.5));
  }
}
BENCHMARK(BM_ClearanceField)->Unit(benchmark::kMillisecond);

void BM_Generate(benchmark::State& state) {
  std::uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        Generate(GeneratorConfig::ForClass(ScenarioClass::kNCSL), ++seed));
  }
}
BENCHMARK(BM_Generate)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
