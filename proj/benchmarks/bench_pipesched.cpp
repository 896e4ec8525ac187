#include <benchmark/benchmark.h>

#include "pipesched/model.hpp"
#include "pipesched/solver.hpp"
#include "pipesched/verifier.hpp"
#include "random_scenario.hpp"

using namespace pipesched;

namespace {

const Scenario& case_study() {
  static const Scenario s = load_scenario(std::string(PIPESCHED_DATA_DIR) + "/case_study_maintenance.json");
  return s;
}

void BM_BuildModel(benchmark::State& state) {
  const auto& s = case_study();
  for (auto _ : state) benchmark::DoNotOptimize(build_model(s));
}
BENCHMARK(BM_BuildModel)->Unit(benchmark::kMillisecond);

// Scales run count on a random line to show growth of the formulation.
void BM_BuildModelRuns(benchmark::State& state) {
  auto s = testing::random_small_scenario(11);
  s.run_count = static_cast<std::size_t>(state.range(0));
  s.new_batch_count = s.run_count;
  for (auto _ : state) benchmark::DoNotOptimize(build_model(s));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_BuildModelRuns)->RangeMultiplier(2)->Range(4, 32)->Complexity()->Unit(benchmark::kMillisecond);

void BM_EmitMps(benchmark::State& state) {
  const auto m = build_model(case_study());
  std::size_t bytes = 0;
  for (auto _ : state) {
    auto mps = emit_mps(m);
    bytes = mps.text.size();
    benchmark::DoNotOptimize(mps);
  }
  state.SetBytesProcessed(static_cast<std::int64_t>(bytes * state.iterations()));
}
BENCHMARK(BM_EmitMps)->Unit(benchmark::kMillisecond);

// A synthetic executable plan: every run pumps one unit from S1 into the
// newest slot and the far-end batch gives one unit to the last depot.
Schedule shuttle_plan(const Scenario& s, int runs) {
  Schedule sch;
  const int fresh = static_cast<int>(s.old_batches.size()) + 1;
  double t = 0;
  double left = s.old_batches.front().volume0;
  int far = 1;
  for (int k = 1; k <= runs; ++k) {
    PumpingRun r;
    r.index = k;
    r.start = t;
    r.end = t + 1;
    t += 1;
    r.injections.push_back({s.sources.front().id, fresh, s.products.front().id, 0.5, 1});
    if (left < 0.5 - 1e-9) {
      ++far;
      left = s.old_batches[static_cast<std::size_t>(far - 1)].volume0;
    }
    r.deliveries.push_back({s.depots.back().id, far, s.old_batches[static_cast<std::size_t>(far - 1)].product, 0.5});
    left -= 0.5;
    sch.runs.push_back(std::move(r));
  }
  return sch;
}

void BM_Simulate(benchmark::State& state) {
  auto s = testing::random_small_scenario(5);
  s.horizon = 1000;
  s.events = {{"e0", 0, ""}, {"emax", 1000, ""}};
  for (auto& src : s.sources) {
    src.rate_min = EventTimeline::constant(0, 1);
    src.rate_max = EventTimeline::constant(4, 1);
  }
  for (auto& d : s.depots) {
    d.delivery_min = EventTimeline::constant(0, 1);
    d.delivery_max = EventTimeline::constant(s.pipeline_volume, 1);
  }
  const auto sch = shuttle_plan(s, static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(simulate(sch, s));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Simulate)->RangeMultiplier(2)->Range(4, 32)->Complexity();

}  // namespace

BENCHMARK_MAIN();
