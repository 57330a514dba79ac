#pragma once

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "perimeter/nfd.hpp"
#include "perimeter/plant.hpp"
#include "perimeter/qp.hpp"

namespace perimeter {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Operating point for the linearisation. Disturbance ordering is
/// [d_n, d_1, ..., d_|O|].
struct SetPoint {
  double n = 4000.0;
  std::vector<double> queue;  ///< l-hat per gate; empty means zeros
  std::vector<double> flow;   ///< q-hat per gate; empty means the gates' nominal flows
  std::vector<double> disturbance;  ///< d-hat; empty means zeros

  /// Fills empty vectors from the gate data.
  [[nodiscard]] SetPoint resolved(std::span<const Gate> gates) const;
};

/// Box limits on states and inputs (absolute units, not deviations).
struct Bounds {
  VectorXd x_min, x_max;
  VectorXd u_min, u_max;
  /// Which states carry inequality rows in the condensed problem.
  std::vector<bool> constrained;
};

/// Discrete-time deviation model dx(k+1) = A dx(k) + B du(k) + C dd(k).
struct LinearModel {
  MatrixXd A, B, C;
  double period_h = 0.05;
  VectorXd x_hat, u_hat, d_hat;
  /// Physical states (n and queues); any further states are delay-chain states.
  int physical_states = 0;
  std::vector<int> delay_steps;  ///< per input; empty when not augmented
  Bounds bounds;

  [[nodiscard]] int nx() const { return static_cast<int>(A.rows()); }
  [[nodiscard]] int nu() const { return static_cast<int>(B.cols()); }
  [[nodiscard]] int nd() const { return static_cast<int>(C.cols()); }

  /// One step of the deviation recursion.
  [[nodiscard]] VectorXd advance(const VectorXd& dx, const VectorXd& du, const VectorXd& dd) const {
    return A * dx + B * du + C * dd;
  }
};

/// Multi-gate model: state [n, l_1..l_|O|], input [q_1..q_|O|],
/// disturbance [d_n, d_1..d_|O|]. The accumulation entry of A is
/// 1 - slope(n-hat) * T unless `slope_override` (1/h) is given.
[[nodiscard]] LinearModel linearize(const NfdParams& nfd, std::span<const Gate> gates,
                                    const SetPoint& set_point, double period_h,
                                    std::optional<double> slope_override = std::nullopt);

/// Single-region model: state [n], input [q_G], disturbance [d_n], with
/// sum(q_min) <= q_G <= sum(q_max).
[[nodiscard]] LinearModel linearize_aggregate(const NfdParams& nfd, std::span<const Gate> gates,
                                              const SetPoint& set_point, double period_h,
                                              std::optional<double> slope_override = std::nullopt);

/// Inserts a shift chain of length kappa_o between input o and the
/// accumulation row. Gates with kappa_o == 0 are unchanged. Chain states are
/// appended after the physical states, gate by gate, newest first.
[[nodiscard]] LinearModel augment_delays(const LinearModel& model, std::span<const int> kappa);

/// Diagonal stage weights: states k = 1..N, inputs k = 0..N-1.
struct CostWeights {
  VectorXd state;  ///< diag(Q), length nx
  VectorXd input;  ///< diag(R), length nu
};

/// Q = diag(1/w, 1/l_1,max, ..., 0 for delay states), R = r I.
[[nodiscard]] CostWeights equity_weights(const LinearModel& model, std::span<const Gate> gates,
                                         double w, double r);

/// Horizon-condensed quadratic program in the input deviations dU:
///   dX = Phi dx0 + Gamma dU + Z dD
///   min 1/2 dU' H dU + dU' (F dx0 + G dD)   s.t.  L dU <= W0 + Wx dx0 + Wd dD
struct CondensedQp {
  int horizon = 0;
  int nx = 0, nu = 0, nd = 0;
  MatrixXd Phi, Gamma, Z;
  MatrixXd H, F, G;
  MatrixXd L;
  VectorXd W0;
  MatrixXd Wx, Wd;
  int input_rows = 0;  ///< leading rows of L that bound inputs only

  [[nodiscard]] VectorXd predict(const VectorXd& dx0, const VectorXd& dU, const VectorXd& dD) const;
  [[nodiscard]] VectorXd gradient(const VectorXd& dx0, const VectorXd& dD) const;
  [[nodiscard]] VectorXd rhs(const VectorXd& dx0, const VectorXd& dD) const;

  /// Problem instance for a measured state and disturbance forecast. With
  /// `state_rows == false` only the input bounds are kept.
  [[nodiscard]] QpProblem problem(const VectorXd& dx0, const VectorXd& dD,
                                  bool state_rows = true) const;
};

/// Throws std::invalid_argument on dimension mismatch, horizon mismatch or a
/// non-positive input weight.
[[nodiscard]] CondensedQp condense(const LinearModel& model, const CostWeights& weights,
                                   int prediction_horizon, int control_horizon,
                                   const Bounds& bounds);

}  // namespace perimeter
