#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "perimeter/linear_model.hpp"
#include "perimeter/plant.hpp"
#include "perimeter/qp.hpp"
#include "perimeter/trajectory.hpp"

namespace perimeter {

/// What to do when the constrained problem has no feasible point.
enum class FallbackPolicy {
  drop_state_rows,  ///< keep input bounds, drop state bounds, re-solve
  fail,             ///< throw SolverError
};

struct MgcConfig {
  int horizon = 15;  ///< N_o = N_p
  double w = 2000.0;
  double r = 1e-5;
  SetPoint set_point;
  std::optional<double> slope_override;  ///< 1/h; replaces slope(n-hat) in A
  /// State bounds on queues (0 <= l <= l_max) and accumulation in the QP.
  bool state_constraints = true;
  QpSettings qp;
  FallbackPolicy fallback = FallbackPolicy::drop_state_rows;

  void validate() const;
};

/// Demand forecast seen by a controller at one step: rows are steps
/// k, k+1, ..., columns are gates (veh/h of upstream arrivals).
using DemandForecast = std::vector<std::vector<double>>;

struct MgcDecision {
  std::vector<double> command;  ///< veh/h per gate
  std::vector<double> green_s;
  Eigen::VectorXd plan;  ///< full optimal dU over the horizon
  QpSolution qp;
  bool fallback = false;
  int clipped = 0;
};

/// Rolling-horizon multi-gate controller. The condensed problem is built once
/// at construction; each step only forms the gradient and right-hand side.
class MgcController {
 public:
  MgcController(const NfdParams& nfd, std::vector<Gate> gates, double period_h, MgcConfig cfg);

  /// First move of the horizon problem from the measured state.
  /// `forecast` must hold at least `horizon` rows; `dn_forecast` is the
  /// expected network disturbance (usually zero).
  [[nodiscard]] MgcDecision step(const NetworkState& state, const DemandForecast& forecast,
                                 double dn_forecast = 0.0);

  /// Deviation state [n, l, z] - x-hat for a plant state.
  [[nodiscard]] Eigen::VectorXd deviation(const NetworkState& state) const;
  /// Stacked disturbance deviations over the horizon.
  [[nodiscard]] Eigen::VectorXd disturbance_deviation(const DemandForecast& forecast,
                                                      double dn_forecast) const;

  [[nodiscard]] const LinearModel& model() const { return model_; }
  [[nodiscard]] const CondensedQp& condensed() const { return qp_; }
  [[nodiscard]] const MgcConfig& config() const { return cfg_; }
  [[nodiscard]] const std::vector<Gate>& gates() const { return gates_; }

 private:
  std::vector<Gate> gates_;
  MgcConfig cfg_;
  LinearModel model_;
  CondensedQp qp_;
  QpSolver solver_;
};

struct SisoDecision {
  double global_flow = 0.0;
  QpSolution qp;
  bool fallback = false;
};

/// Single-region controller on the accumulation equation alone, producing a
/// global perimeter flow bounded by the summed gate limits.
class SisoController {
 public:
  SisoController(const NfdParams& nfd, const std::vector<Gate>& gates, double period_h, MgcConfig cfg);

  [[nodiscard]] SisoDecision step(double n, double dn_forecast = 0.0);

  [[nodiscard]] const LinearModel& model() const { return model_; }
  [[nodiscard]] const CondensedQp& condensed() const { return qp_; }

 private:
  MgcConfig cfg_;
  LinearModel model_;
  CondensedQp qp_;
  QpSolver solver_;
};

/// Anything that turns a measured state into gate commands.
class GatePolicy {
 public:
  virtual ~GatePolicy() = default;
  [[nodiscard]] virtual std::string name() const = 0;
  /// `forecast` rows start at step k.
  [[nodiscard]] virtual std::vector<double> command(int k, const NetworkState& state,
                                                    const DemandForecast& forecast,
                                                    StepDiagnostics& diag) = 0;
  /// Rows of demand forecast this policy needs beyond the current step.
  [[nodiscard]] virtual int lookahead() const { return 1; }
};

class MgcPolicy final : public GatePolicy {
 public:
  explicit MgcPolicy(MgcController controller) : controller_(std::move(controller)) {}
  [[nodiscard]] std::string name() const override { return "mgc"; }
  [[nodiscard]] std::vector<double> command(int k, const NetworkState& state,
                                            const DemandForecast& forecast,
                                            StepDiagnostics& diag) override;
  [[nodiscard]] int lookahead() const override { return controller_.config().horizon; }
  [[nodiscard]] MgcController& controller() { return controller_; }

 private:
  MgcController controller_;
};

/// Inputs for a closed-loop run.
struct ClosedLoopSetup {
  NetworkState initial;
  /// Upstream arrivals per step and gate (veh/h); must cover horizon + lookahead
  /// rows or is zero-padded.
  std::vector<std::vector<double>> arrivals;
  int horizon = 40;
  std::uint64_t seed = 0;
  DisturbanceSpec disturbance;
};

/// Applies the policy's command each period, advances the plant and logs the
/// trajectory, diagnostics and conservation bookkeeping. Errors are rethrown
/// with the failing step index.
[[nodiscard]] Trajectory run_rolling_horizon(const Plant& plant, GatePolicy& policy,
                                             const ClosedLoopSetup& setup);

}  // namespace perimeter
