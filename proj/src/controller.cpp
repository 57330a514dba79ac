#include "perimeter/controller.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace perimeter {

namespace {

std::vector<int> delays_of(const std::vector<Gate>& gates) {
  std::vector<int> k;
  k.reserve(gates.size());
  for (const Gate& g : gates) k.push_back(g.delay_steps);
  return k;
}

Bounds with_state_rows(Bounds b, bool enabled) {
  if (!enabled) std::fill(b.constrained.begin(), b.constrained.end(), false);
  return b;
}

void fill_diag(StepDiagnostics& d, const QpSolution& s) {
  d.status = to_string(s.status);
  d.iterations = s.iterations;
  d.stationarity = s.kkt.stationarity;
  d.primal = s.kkt.primal;
  d.complementarity = s.kkt.complementarity;
  d.active_constraints = s.active;
}

}  // namespace

void MgcConfig::validate() const {
  if (horizon < 1) throw std::invalid_argument("controller.horizon must be at least 1");
  if (!(w > 0.0) || !std::isfinite(w)) throw std::invalid_argument("controller.w must be positive");
  if (!(r > 0.0) || !std::isfinite(r)) throw std::invalid_argument("controller.r must be positive");
  if (!(qp.tol > 0.0)) throw std::invalid_argument("controller.qp_tol must be positive");
  if (slope_override && !std::isfinite(*slope_override))
    throw std::invalid_argument("controller.slope_override must be finite");
}

MgcController::MgcController(const NfdParams& nfd, std::vector<Gate> gates, double period_h,
                             MgcConfig cfg)
    : gates_(std::move(gates)), cfg_(std::move(cfg)), solver_(cfg_.qp) {
  cfg_.validate();
  const LinearModel base = linearize(nfd, gates_, cfg_.set_point, period_h, cfg_.slope_override);
  model_ = augment_delays(base, delays_of(gates_));
  const CostWeights weights = equity_weights(model_, gates_, cfg_.w, cfg_.r);
  qp_ = condense(model_, weights, cfg_.horizon, cfg_.horizon,
                 with_state_rows(model_.bounds, cfg_.state_constraints));
}

Eigen::VectorXd MgcController::deviation(const NetworkState& state) const {
  const std::size_t ng = gates_.size();
  if (state.queue.size() != ng) throw std::invalid_argument("state has wrong number of queues");
  Eigen::VectorXd dx(model_.nx());
  dx(0) = state.n;
  for (std::size_t o = 0; o < ng; ++o) dx(static_cast<Eigen::Index>(o) + 1) = state.queue[o];
  Eigen::Index row = model_.physical_states;
  for (std::size_t o = 0; o < ng; ++o) {
    const int k = gates_[o].delay_steps;
    if (k == 0) continue;
    const auto& buf = o < state.in_transit.size() ? state.in_transit[o] : std::deque<double>{};
    for (int j = 0; j < k; ++j) {
      // Chain entry j is the release j+1 periods old; the buffer front is oldest.
      const int idx = k - 1 - j;
      dx(row + j) = idx < static_cast<int>(buf.size()) ? buf[static_cast<std::size_t>(idx)]
                                                       : model_.x_hat(row + j);
    }
    row += k;
  }
  return dx - model_.x_hat;
}

Eigen::VectorXd MgcController::disturbance_deviation(const DemandForecast& forecast,
                                                     double dn_forecast) const {
  const int N = cfg_.horizon;
  const int nd = model_.nd();
  const std::size_t ng = gates_.size();
  Eigen::VectorXd dD(static_cast<Eigen::Index>(N) * nd);
  for (int k = 0; k < N; ++k) {
    const Eigen::Index base = static_cast<Eigen::Index>(k) * nd;
    dD(base) = dn_forecast - model_.d_hat(0);
    for (std::size_t o = 0; o < ng; ++o) {
      const double arr = static_cast<std::size_t>(k) < forecast.size() ? forecast[static_cast<std::size_t>(k)].at(o) : 0.0;
      // Queue balance is exact when the excess over the nominal flow is the disturbance.
      const auto i = static_cast<Eigen::Index>(o) + 1;
      dD(base + i) = arr - model_.u_hat(i - 1) - model_.d_hat(i);
    }
  }
  return dD;
}

MgcDecision MgcController::step(const NetworkState& state, const DemandForecast& forecast,
                                double dn_forecast) {
  const Eigen::VectorXd dx0 = deviation(state);
  const Eigen::VectorXd dD = disturbance_deviation(forecast, dn_forecast);

  MgcDecision out;
  out.qp = solver_.solve(qp_.problem(dx0, dD, cfg_.state_constraints));
  if (out.qp.status == QpStatus::infeasible && cfg_.state_constraints) {
    if (cfg_.fallback == FallbackPolicy::fail)
      throw SolverError("horizon problem infeasible with state constraints");
    out.fallback = true;
    out.qp = solver_.solve(qp_.problem(dx0, dD, false));
  }
  if (out.qp.status != QpStatus::optimal) {
    std::ostringstream msg;
    msg << "horizon problem not solved: " << to_string(out.qp.status) << " after "
        << out.qp.iterations << " iterations";
    throw SolverError(msg.str());
  }

  out.plan = out.qp.u;
  const std::size_t ng = gates_.size();
  out.command.resize(ng);
  out.green_s.resize(ng);
  for (std::size_t o = 0; o < ng; ++o) {
    const Gate& g = gates_[o];
    const double raw = model_.u_hat(static_cast<Eigen::Index>(o)) + out.qp.u(static_cast<Eigen::Index>(o));
    const double slack = 1e-9 * std::max(1.0, g.q_max);
    if (raw < g.q_min - slack || raw > g.q_max + slack) ++out.clipped;
    out.command[o] = std::clamp(raw, g.q_min, g.q_max);
    out.green_s[o] = g.green_for_flow(out.command[o]);
  }
  return out;
}

SisoController::SisoController(const NfdParams& nfd, const std::vector<Gate>& gates,
                               double period_h, MgcConfig cfg)
    : cfg_(std::move(cfg)), solver_(cfg_.qp) {
  cfg_.validate();
  model_ = linearize_aggregate(nfd, gates, cfg_.set_point, period_h, cfg_.slope_override);
  CostWeights weights;
  weights.state = Eigen::VectorXd::Constant(1, 1.0 / cfg_.w);
  weights.input = Eigen::VectorXd::Constant(1, cfg_.r);
  qp_ = condense(model_, weights, cfg_.horizon, cfg_.horizon,
                 with_state_rows(model_.bounds, cfg_.state_constraints));
}

SisoDecision SisoController::step(double n, double dn_forecast) {
  Eigen::VectorXd dx0(1);
  dx0(0) = n - model_.x_hat(0);
  const Eigen::VectorXd dD = Eigen::VectorXd::Constant(cfg_.horizon, dn_forecast - model_.d_hat(0));
  SisoDecision out;
  out.qp = solver_.solve(qp_.problem(dx0, dD, cfg_.state_constraints));
  if (out.qp.status == QpStatus::infeasible && cfg_.state_constraints) {
    if (cfg_.fallback == FallbackPolicy::fail)
      throw SolverError("single-region problem infeasible with state constraints");
    out.fallback = true;
    out.qp = solver_.solve(qp_.problem(dx0, dD, false));
  }
  if (out.qp.status != QpStatus::optimal)
    throw SolverError(std::string("single-region problem not solved: ") + to_string(out.qp.status));
  const double lo = model_.bounds.u_min(0);
  const double hi = model_.bounds.u_max(0);
  out.global_flow = std::clamp(model_.u_hat(0) + out.qp.u(0), lo, hi);
  return out;
}

std::vector<double> MgcPolicy::command(int k, const NetworkState& state,
                                       const DemandForecast& forecast, StepDiagnostics& diag) {
  (void)k;
  MgcDecision d = controller_.step(state, forecast);
  fill_diag(diag, d.qp);
  diag.fallback = d.fallback;
  diag.clipped = d.clipped;
  diag.green_s = d.green_s;
  diag.global_flow = 0.0;
  for (double q : d.command) diag.global_flow += q;
  return d.command;
}

Trajectory run_rolling_horizon(const Plant& plant, GatePolicy& policy, const ClosedLoopSetup& setup) {
  const auto& gates = plant.gates();
  const std::size_t ng = gates.size();
  const double T = plant.params().period_h;
  if (setup.horizon < 0) throw std::invalid_argument("closed-loop horizon must be non-negative");
  if (setup.initial.queue.size() != ng) throw std::invalid_argument("initial state has wrong number of queues");

  const std::vector<double> zeros(ng, 0.0);
  auto arrivals_at = [&](int k) -> const std::vector<double>& {
    if (k >= 0 && static_cast<std::size_t>(k) < setup.arrivals.size()) {
      const auto& row = setup.arrivals[static_cast<std::size_t>(k)];
      if (row.size() != ng) throw std::invalid_argument("arrival row has wrong number of gates");
      return row;
    }
    return zeros;
  };

  Trajectory traj;
  traj.period_h = T;
  traj.rows.reserve(static_cast<std::size_t>(setup.horizon) + 1);
  traj.diagnostics.reserve(static_cast<std::size_t>(setup.horizon));
  ConservationLedger& led = traj.ledger;
  led.initial_total = setup.initial.total_vehicles(T);

  NetworkState x = setup.initial;
  const int look = std::max(1, policy.lookahead());
  DemandForecast forecast(static_cast<std::size_t>(look));

  for (int k = 0; k < setup.horizon; ++k) {
    for (int j = 0; j < look; ++j) forecast[static_cast<std::size_t>(j)] = arrivals_at(k + j);

    StepDiagnostics diag;
    diag.k = k;
    std::vector<double> cmd;
    try {
      cmd = policy.command(k, x, forecast, diag);
    } catch (const SolverError& e) {
      std::ostringstream msg;
      msg << policy.name() << " at step " << k << ": " << e.what();
      throw SolverError(msg.str());
    }

    const double dn = make_disturbance(setup.seed, k, x.n, setup.disturbance);
    StepRecord rec;
    NetworkState next = plant.step(x, cmd, arrivals_at(k), dn, &rec);

    TrajectoryRow row;
    row.k = k;
    row.t_h = k * T;
    row.n = x.n;
    row.queue = x.queue;
    row.virtual_queue = x.virtual_queue;
    row.released = rec.released;
    row.command = cmd;
    row.disturbance = dn;
    row.exit_flow = rec.exit_flow;
    traj.rows.push_back(std::move(row));
    traj.diagnostics.push_back(std::move(diag));

    led.inflow += rec.inflow_vehicles;
    led.outflow += T * rec.exit_flow;
    led.clamped += rec.clamped_vehicles;
    if (rec.gridlock) ++led.gridlock_events;
    if (rec.emptied) ++led.empty_events;
    x = std::move(next);
  }

  TrajectoryRow last;
  last.k = setup.horizon;
  last.t_h = setup.horizon * T;
  last.n = x.n;
  last.queue = x.queue;
  last.virtual_queue = x.virtual_queue;
  last.released.assign(ng, 0.0);
  last.command.assign(ng, 0.0);
  last.exit_flow = capped_outflow(plant.params().nfd, x.n);
  traj.rows.push_back(std::move(last));
  led.final_total = x.total_vehicles(T);
  return traj;
}

}  // namespace perimeter
