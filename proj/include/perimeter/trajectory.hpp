#pragma once

#include <string>
#include <vector>

namespace perimeter {

/// Plant state at controller step k together with what was applied during
/// [k, k+1). The final row carries the terminal state and zero flows.
struct TrajectoryRow {
  int k = 0;
  double t_h = 0.0;
  double n = 0.0;
  std::vector<double> queue;
  std::vector<double> virtual_queue;
  std::vector<double> released;  ///< realised mean gate release (veh/h)
  std::vector<double> command;   ///< ordered gate flows (veh/h)
  double disturbance = 0.0;      ///< d_n (veh/h)
  double exit_flow = 0.0;        ///< min(exit_cap, output(n)) (veh/h)
};

/// Per-step controller diagnostics.
struct StepDiagnostics {
  int k = 0;
  std::string status = "n/a";
  int iterations = 0;
  double stationarity = 0.0;
  double primal = 0.0;
  double complementarity = 0.0;
  int active_constraints = 0;
  bool fallback = false;
  int clipped = 0;
  double global_flow = 0.0;  ///< q_G for single-region policies, sum of commands otherwise
  std::vector<double> green_s;
};

/// Vehicle bookkeeping over a closed-loop run.
struct ConservationLedger {
  double initial_total = 0.0;
  double final_total = 0.0;
  double inflow = 0.0;   ///< vehicles arriving upstream of gates plus d_n contributions
  double outflow = 0.0;  ///< vehicles completing trips
  double clamped = 0.0;  ///< net vehicles added by clamping n into [0, n_max]
  int gridlock_events = 0;
  int empty_events = 0;

  /// |final - initial - (inflow - outflow + clamped)|
  [[nodiscard]] double residual() const {
    const double d = final_total - initial_total - (inflow - outflow + clamped);
    return d < 0 ? -d : d;
  }
  [[nodiscard]] double scale() const {
    double s = 1.0;
    for (double v : {initial_total, final_total, inflow, outflow}) s = v > s ? v : s;
    return s;
  }
  [[nodiscard]] bool holds(double rel_tol = 1e-6) const { return residual() <= rel_tol * scale(); }
};

struct Trajectory {
  double period_h = 0.05;
  std::vector<TrajectoryRow> rows;
  std::vector<StepDiagnostics> diagnostics;
  ConservationLedger ledger;
};

}  // namespace perimeter
