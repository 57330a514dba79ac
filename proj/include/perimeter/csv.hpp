#pragma once

#include <ostream>
#include <vector>

#include "perimeter/experiment.hpp"
#include "perimeter/trajectory.hpp"

namespace perimeter {

/// k, t_hours, n, l_1..l_O, v_1..v_O, q_1..q_O, d_n, exit_flow
void write_trajectory_csv(std::ostream& os, const Trajectory& t);

/// k, status, iterations, stationarity, primal, complementarity, active, fallback, clipped, q_G, g_1..g_O
void write_diagnostics_csv(std::ostream& os, const Trajectory& t);

/// scenario, policy, N_o, tts_pn, tts_gates_avg, rqb, gridlock_events
void write_metrics_csv(std::ostream& os, const std::vector<RunResult>& runs);

/// scenario, N_o, ok, tts, tts_gates_avg, rqb, best, error
void write_sweep_csv(std::ostream& os, const SweepResult& sweep);

/// One row per scenario x policy with the full metric set.
void write_comparison_csv(std::ostream& os, const std::vector<RunResult>& runs);

/// Scenario rows, one average gate-TTS column per policy in first-seen order.
void write_comparison_pivot(std::ostream& os, const std::vector<RunResult>& runs);

}  // namespace perimeter
