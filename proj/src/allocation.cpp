#include "perimeter/allocation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

namespace perimeter {

const char* to_string(Policy p) {
  switch (p) {
    case Policy::mgc: return "mgc";
    case Policy::cap: return "cap";
    case Policy::oap: return "oap";
    case Policy::none: return "none";
  }
  return "?";
}

Policy parse_policy(const std::string& name) {
  if (name == "mgc") return Policy::mgc;
  if (name == "cap") return Policy::cap;
  if (name == "oap") return Policy::oap;
  if (name == "none") return Policy::none;
  throw std::invalid_argument("unknown policy '" + name + "' (expected mgc, cap, oap or none)");
}

std::vector<double> cap_ratios(std::span<const Gate> gates) {
  std::vector<double> r(gates.size());
  if (gates.empty()) return r;
  double total = 0.0;
  for (const Gate& g : gates) {
    if (!(g.storage > 0.0)) throw std::invalid_argument("cap_ratios: storage must be positive");
    total += g.storage;
  }
  double acc = 0.0;
  for (std::size_t o = 0; o + 1 < gates.size(); ++o) {
    r[o] = gates[o].storage / total;
    acc += r[o];
  }
  r.back() = 1.0 - acc;
  return r;
}

namespace {

void clip_into(AllocationResult& res, std::span<const Gate> gates) {
  for (std::size_t o = 0; o < gates.size(); ++o) {
    double& q = res.q[o];
    if (q > gates[o].q_max) {
      res.wasted += q - gates[o].q_max;
      q = gates[o].q_max;
      ++res.clipped;
    } else if (q < gates[o].q_min) {
      res.deficit += gates[o].q_min - q;
      q = gates[o].q_min;
      ++res.clipped;
    }
  }
}

}  // namespace

AllocationResult cap_allocate(double q_G, std::span<const Gate> gates) {
  if (!(q_G >= 0.0)) throw std::invalid_argument("cap_allocate: q_G must be non-negative");
  AllocationResult res;
  res.policy = Policy::cap;
  const std::vector<double> r = cap_ratios(gates);
  double nominal = 0.0, lo = 0.0;
  for (const Gate& g : gates) {
    nominal += g.q_nom;
    lo += g.q_min;
  }
  res.q.resize(gates.size());
  if (q_G < lo) {
    // q_min takes precedence over meeting the ordered total.
    for (std::size_t o = 0; o < gates.size(); ++o) res.q[o] = gates[o].q_min;
    res.deficit = lo - q_G;
    res.clipped = static_cast<int>(gates.size());
    return res;
  }
  for (std::size_t o = 0; o < gates.size(); ++o) res.q[o] = gates[o].q_nom + r[o] * (q_G - nominal);
  clip_into(res, gates);
  return res;
}

AllocationResult oap_allocate(double q_G, std::span<const Gate> gates, const QpSettings& settings) {
  if (!(q_G >= 0.0)) throw std::invalid_argument("oap_allocate: q_G must be non-negative");
  const auto n = static_cast<Eigen::Index>(gates.size());
  AllocationResult res;
  res.policy = Policy::oap;
  res.q.resize(gates.size());
  double lo = 0.0, hi = 0.0, nominal = 0.0;
  for (const Gate& g : gates) {
    if (!(g.q_nom > 0.0)) throw std::invalid_argument("oap_allocate: nominal flows must be positive");
    lo += g.q_min;
    hi += g.q_max;
    nominal += g.q_nom;
  }
  if (q_G <= lo || q_G >= hi) {
    const bool low = q_G <= lo;
    for (std::size_t o = 0; o < gates.size(); ++o) res.q[o] = low ? gates[o].q_min : gates[o].q_max;
    if (low) res.deficit = lo - q_G;
    else res.wasted = q_G - hi;
    res.clipped = static_cast<int>(gates.size());
    return res;
  }

  // Decision variable: deviation from nominal.
  QpProblem p;
  p.H = Eigen::MatrixXd::Zero(n, n);
  p.f = Eigen::VectorXd::Zero(n);
  p.L.resize(2 * n, n);
  p.L << Eigen::MatrixXd::Identity(n, n), -Eigen::MatrixXd::Identity(n, n);
  p.W.resize(2 * n);
  for (Eigen::Index o = 0; o < n; ++o) {
    const Gate& g = gates[static_cast<std::size_t>(o)];
    p.H(o, o) = 1.0 / g.q_nom;
    p.W(o) = g.q_max - g.q_nom;
    p.W(n + o) = g.q_nom - g.q_min;
  }
  p.Aeq = Eigen::MatrixXd::Ones(1, n);
  p.beq = Eigen::VectorXd::Constant(1, q_G - nominal);

  QpSolver solver(settings);
  const QpSolution s = solver.solve(p);
  if (s.status != QpStatus::optimal)
    throw SolverError(std::string("allocation problem not solved: ") + to_string(s.status));
  for (Eigen::Index o = 0; o < n; ++o) {
    const Gate& g = gates[static_cast<std::size_t>(o)];
    const double q = std::clamp(g.q_nom + s.u(o), g.q_min, g.q_max);
    res.q[static_cast<std::size_t>(o)] = q;
  }
  res.clipped = s.active;
  return res;
}

std::vector<double> oap_pseudoinverse(double q_G, std::span<const double> q_hat) {
  const auto n = static_cast<Eigen::Index>(q_hat.size());
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n + 1, n + 1);
  Eigen::VectorXd b(n + 1);
  for (Eigen::Index o = 0; o < n; ++o) {
    A(o, o) = 1.0;
    A(o, n) = -q_hat[static_cast<std::size_t>(o)];
    A(n, o) = 1.0;
    b(o) = q_hat[static_cast<std::size_t>(o)];
  }
  b(n) = q_G;
  const Eigen::VectorXd x = A.completeOrthogonalDecomposition().pseudoInverse() * b;
  return {x.data(), x.data() + n};
}

AllocationResult no_control(std::span<const Gate> gates) {
  AllocationResult res;
  res.policy = Policy::none;
  res.q.reserve(gates.size());
  for (const Gate& g : gates) res.q.push_back(g.q_max);
  return res;
}

AllocationPolicy::AllocationPolicy(Policy policy, SisoController siso, std::vector<Gate> gates)
    : policy_(policy), siso_(std::move(siso)), gates_(std::move(gates)) {
  if (policy_ != Policy::cap && policy_ != Policy::oap)
    throw std::invalid_argument("allocation policy must be cap or oap");
}

std::vector<double> AllocationPolicy::command(int, const NetworkState& state, const DemandForecast&,
                                              StepDiagnostics& diag) {
  const SisoDecision d = siso_.step(state.n);
  diag.status = to_string(d.qp.status);
  diag.iterations = d.qp.iterations;
  diag.stationarity = d.qp.kkt.stationarity;
  diag.primal = d.qp.kkt.primal;
  diag.complementarity = d.qp.kkt.complementarity;
  diag.active_constraints = d.qp.active;
  diag.fallback = d.fallback;
  diag.global_flow = d.global_flow;
  AllocationResult a = policy_ == Policy::cap ? cap_allocate(d.global_flow, gates_)
                                              : oap_allocate(d.global_flow, gates_);
  diag.clipped = a.clipped;
  diag.green_s.resize(gates_.size());
  for (std::size_t o = 0; o < gates_.size(); ++o) diag.green_s[o] = gates_[o].green_for_flow(a.q[o]);
  return a.q;
}

std::vector<double> NoControlPolicy::command(int, const NetworkState&, const DemandForecast&,
                                             StepDiagnostics& diag) {
  AllocationResult a = no_control(gates_);
  diag.status = "n/a";
  diag.global_flow = 0.0;
  diag.green_s.resize(gates_.size());
  for (std::size_t o = 0; o < gates_.size(); ++o) {
    diag.global_flow += a.q[o];
    diag.green_s[o] = gates_[o].g_max_s;
  }
  return a.q;
}

}  // namespace perimeter
