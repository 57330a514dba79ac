#pragma once

#include <span>
#include <string>
#include <vector>

#include "perimeter/controller.hpp"
#include "perimeter/plant.hpp"
#include "perimeter/qp.hpp"

namespace perimeter {

enum class Policy { mgc, cap, oap, none };

[[nodiscard]] const char* to_string(Policy p);
/// Accepts "mgc", "cap", "oap", "none"; throws std::invalid_argument otherwise.
[[nodiscard]] Policy parse_policy(const std::string& name);

/// Per-gate split of a global perimeter flow.
///
/// `wasted` is flow above what the gates can take, `deficit` the flow added to
/// honour q_min; sum(q) + wasted - deficit == q_G.
struct AllocationResult {
  std::vector<double> q;
  double wasted = 0.0;
  double deficit = 0.0;
  Policy policy = Policy::cap;
  int clipped = 0;
};

/// l_max,o / sum(l_max); the last entry closes the sum to exactly 1.
[[nodiscard]] std::vector<double> cap_ratios(std::span<const Gate> gates);

/// q_o = q-hat_o + r_o (q_G - sum q-hat), clipped to [q_min, q_max]. Below
/// sum(q_min) every gate sits at q_min.
[[nodiscard]] AllocationResult cap_allocate(double q_G, std::span<const Gate> gates);

/// min 1/2 sum (q_o - q-hat_o)^2 / q-hat_o  s.t.  sum q = q_G, q_min <= q <= q_max.
/// Solved with the dense QP solver; out-of-range q_G pins every gate to the
/// violated bound.
[[nodiscard]] AllocationResult oap_allocate(double q_G, std::span<const Gate> gates,
                                            const QpSettings& settings = {});

/// Unbounded optimum from the stationarity system
///   [I  -q-hat; 1'  0] [q; lambda] = [q-hat; q_G]
/// solved by pseudoinverse. Ignores gate limits.
[[nodiscard]] std::vector<double> oap_pseudoinverse(double q_G, std::span<const double> q_hat);

/// Every gate commanded at q_max.
[[nodiscard]] AllocationResult no_control(std::span<const Gate> gates);

/// Single-region controller followed by CAP or OAP.
class AllocationPolicy final : public GatePolicy {
 public:
  AllocationPolicy(Policy policy, SisoController siso, std::vector<Gate> gates);
  [[nodiscard]] std::string name() const override { return to_string(policy_); }
  [[nodiscard]] std::vector<double> command(int k, const NetworkState& state,
                                            const DemandForecast& forecast,
                                            StepDiagnostics& diag) override;

 private:
  Policy policy_;
  SisoController siso_;
  std::vector<Gate> gates_;
};

class NoControlPolicy final : public GatePolicy {
 public:
  explicit NoControlPolicy(std::vector<Gate> gates) : gates_(std::move(gates)) {}
  [[nodiscard]] std::string name() const override { return "none"; }
  [[nodiscard]] std::vector<double> command(int k, const NetworkState& state,
                                            const DemandForecast& forecast,
                                            StepDiagnostics& diag) override;

 private:
  std::vector<Gate> gates_;
};

}  // namespace perimeter
