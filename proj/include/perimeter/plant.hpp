#pragma once

#include <cstdint>
#include <deque>
#include <span>
#include <vector>

#include "perimeter/nfd.hpp"

namespace perimeter {

/// One signalised entrance link at the perimeter.
///
/// Flows follow from the signal plan via q = g * S / C; config loading checks
/// that the stored flows agree with the greens.
struct Gate {
  int id = 0;
  double storage = 0.0;          ///< l_max (veh)
  double saturation_flow = 0.0;  ///< S (veh/h)
  double cycle_s = 0.0;          ///< C (s)
  double g_min_s = 0.0;
  double g_nom_s = 0.0;
  double g_max_s = 0.0;
  double q_min = 0.0;  ///< veh/h
  double q_nom = 0.0;
  double q_max = 0.0;
  int delay_steps = 0;  ///< kappa, in controller periods

  /// Builds a gate whose flows are derived from its greens.
  static Gate from_signal_plan(int id, double storage, double saturation_flow, double cycle_s,
                               double g_min_s, double g_nom_s, double g_max_s,
                               int delay_steps = 0);

  [[nodiscard]] double flow_for_green(double green_s) const {
    return green_s * saturation_flow / cycle_s;
  }
  [[nodiscard]] double green_for_flow(double flow) const { return flow * cycle_s / saturation_flow; }

  void validate() const;
};

/// Plant state: protected-network accumulation plus per-gate queues.
struct NetworkState {
  double n = 0.0;
  std::vector<double> queue;          ///< l_o (veh)
  std::vector<double> virtual_queue;  ///< v_o: vehicles held upstream of a full link (veh)
  /// Per gate, released flows (veh/h) still travelling towards the network.
  /// front() is the oldest entry and is the next to arrive.
  std::vector<std::deque<double>> in_transit;

  /// State with all queues at `queue_fraction` of storage and delay buffers
  /// filled with `transit_flow` (veh/h) per gate.
  static NetworkState initial(std::span<const Gate> gates, double n, double queue_fraction,
                              std::span<const double> transit_flow = {});

  /// n + sum l + sum v + vehicles in transit, with transit flows lasting one period.
  [[nodiscard]] double total_vehicles(double period_h) const;
};

/// Congested-regime disturbance on the network balance: a uniform draw in
/// [-half_range, half_range] whenever n exceeds the threshold, zero otherwise.
struct DisturbanceSpec {
  bool enabled = true;
  double threshold = 6000.0;   ///< veh
  double half_range = 5000.0;  ///< veh/h
};

/// Deterministic disturbance for controller step `k`. The draw depends only on
/// (seed, k), so runs under different policies see the same noise sequence.
[[nodiscard]] double make_disturbance(std::uint64_t seed, std::int64_t k, double n_k,
                                      const DisturbanceSpec& spec);

/// Trapezoidal demand shape, in controller steps.
struct TrapezoidShape {
  int ramp_up = 5;
  int plateau = 15;
  int ramp_down = 5;
  double level = 0.0;  ///< plateau as a fraction of saturation flow
};

/// Piecewise-linear series rising from 0 to level*S over ramp_up steps,
/// holding for plateau steps, falling back to 0 over ramp_down steps, then
/// zero-padded to `horizon` entries.
[[nodiscard]] std::vector<double> make_trapezoid(const Gate& gate, const TrapezoidShape& shape,
                                                 int horizon);

struct PlantParams {
  NfdParams nfd;
  double period_h = 0.05;           ///< T_n
  int substeps = 10;                ///< m; queue step T_l = T_n / m
  double overflow_fraction = 0.9;   ///< c

  void validate() const;
  [[nodiscard]] double substep_h() const { return period_h / substeps; }
};

/// Realised gate release (veh/h) for one queue sub-step.
///
/// If the network is at or above c * n_max the gate falls back to q_min
/// (limited by what is physically available). Otherwise it releases
/// min(arrivals + queue / T_l, command, q_max).
[[nodiscard]] double gate_outflow(double n, double queue, double command, double arrivals,
                                  const Gate& gate, double overflow_fraction, double n_max,
                                  double substep_h);

/// Bookkeeping for one controller period.
struct StepRecord {
  std::vector<double> released;  ///< mean realised gate release over the period (veh/h)
  std::vector<double> arrived;   ///< flow reaching the network from each gate this period
  double exit_flow = 0.0;        ///< min(exit_cap, output(n)) at the start of the period
  double disturbance = 0.0;      ///< d_n actually applied
  double inflow_vehicles = 0.0;  ///< T * (sum of gate arrivals + d_n)
  double clamped_vehicles = 0.0; ///< vehicles added (+) or removed (-) by clamping n to [0, n_max]
  bool gridlock = false;         ///< n clamped at n_max
  bool emptied = false;          ///< n clamped at 0
};

/// Nonlinear multi-rate plant: queues integrate with T_l, the network with T_n.
/// Stateless apart from parameters; `step` is a pure function of its inputs.
class Plant {
 public:
  Plant(PlantParams params, std::vector<Gate> gates);

  /// Advances one controller period.
  ///
  /// `commands` are the ordered gate flows (veh/h), `arrivals` the upstream
  /// demand per gate (veh/h), `d_n` the network disturbance (veh/h).
  [[nodiscard]] NetworkState step(const NetworkState& state, std::span<const double> commands,
                                  std::span<const double> arrivals, double d_n,
                                  StepRecord* record = nullptr) const;

  [[nodiscard]] const PlantParams& params() const { return params_; }
  [[nodiscard]] const std::vector<Gate>& gates() const { return gates_; }

 private:
  PlantParams params_;
  std::vector<Gate> gates_;
};

}  // namespace perimeter
