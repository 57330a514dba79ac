#include <benchmark/benchmark.h>

#include "perimeter/config.hpp"
#include "perimeter/experiment.hpp"

using namespace perimeter;

namespace {

const ExperimentConfig& config() {
  static const ExperimentConfig cfg = load_config(PERIMETER_DATA_DIR "/san_francisco.json");
  return cfg;
}

std::vector<Scenario> workload(int control_horizon) {
  auto s = grid_scenarios(config(), Policy::mgc);
  for (auto& x : s) x.control_horizon = control_horizon;
  return s;
}

void run(benchmark::State& state, Execution mode) {
  const auto scenarios = workload(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    auto r = run_batch(config(), scenarios, mode, false);
    benchmark::DoNotOptimize(r);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(scenarios.size()));
}

void BM_BatchSerial(benchmark::State& state) { run(state, Execution::serial); }
void BM_BatchParallel(benchmark::State& state) { run(state, Execution::parallel); }

}  // namespace

BENCHMARK(BM_BatchSerial)->Arg(5)->Arg(15)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_BatchParallel)->Arg(5)->Arg(15)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
