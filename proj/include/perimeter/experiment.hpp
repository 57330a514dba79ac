#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "perimeter/allocation.hpp"
#include "perimeter/config.hpp"
#include "perimeter/controller.hpp"
#include "perimeter/trajectory.hpp"

namespace perimeter {

struct Scenario {
  std::string name;
  double n0 = 3000.0;
  double queue_init_fraction = 0.7;
  std::string demand = "none";
  int horizon = 40;       ///< simulated periods
  int control_horizon = 15;  ///< N_o for mgc and the single-region controller
  std::uint64_t seed = 1;
  Policy policy = Policy::mgc;
};

struct RunMetrics {
  double tts = 0.0;
  double tts_network = 0.0;
  std::vector<double> tts_gates;
  double tts_gates_avg = 0.0;
  double rqb = 0.0;
  double served = 0.0;  ///< vehicles that completed trips
  int gridlock_events = 0;
  int clip_events = 0;
  int fallback_steps = 0;
  double conservation_residual = 0.0;
  double clamped = 0.0;
  bool conserved = false;
};

struct RunResult {
  Scenario scenario;
  bool ok = false;
  std::string error;
  Trajectory trajectory;
  RunMetrics metrics;
};

enum class Execution { serial, parallel };

/// Upstream arrivals per step: background plus the scenario's trapezoid,
/// `rows` long.
[[nodiscard]] std::vector<std::vector<double>> scenario_arrivals(const ExperimentConfig& cfg,
                                                                 const Scenario& s, int rows);

/// Builds the gate policy for a scenario.
[[nodiscard]] std::unique_ptr<GatePolicy> make_policy(const ExperimentConfig& cfg, const Scenario& s);

/// Runs one closed loop. Throws on configuration or solver errors.
[[nodiscard]] RunResult run_scenario(const ExperimentConfig& cfg, const Scenario& s);

/// Runs every scenario; failures are captured per run. Results come back in
/// input order regardless of execution mode.
[[nodiscard]] std::vector<RunResult> run_batch(const ExperimentConfig& cfg,
                                               const std::vector<Scenario>& scenarios,
                                               Execution mode = Execution::parallel,
                                               bool keep_trajectories = true);

/// Initial accumulation x demand grid from the config, one policy.
[[nodiscard]] std::vector<Scenario> grid_scenarios(const ExperimentConfig& cfg, Policy policy = Policy::mgc);

struct SweepRow {
  std::string scenario;
  int control_horizon = 0;
  bool ok = false;
  std::string error;
  double tts = 0.0;
  double tts_gates_avg = 0.0;
  double rqb = 0.0;
  bool conserved = false;
  bool best = false;  ///< lowest TTS within its scenario
};

struct SweepResult {
  std::vector<SweepRow> rows;  ///< sorted by scenario then horizon
  /// Per scenario: max |TTS - mean| / mean over horizons >= spread_from.
  std::vector<std::pair<std::string, double>> spread;
};

[[nodiscard]] SweepResult sweep_horizons(const ExperimentConfig& cfg, const std::vector<Scenario>& base,
                                         const std::vector<int>& horizons,
                                         Execution mode = Execution::parallel);

/// Every scenario under every policy; result order is scenario-major.
[[nodiscard]] std::vector<RunResult> compare_policies(const ExperimentConfig& cfg,
                                                      const std::vector<Scenario>& base,
                                                      const std::vector<Policy>& policies,
                                                      Execution mode = Execution::parallel);

}  // namespace perimeter
