#include "perimeter/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "perimeter/metrics.hpp"

namespace perimeter {

std::vector<std::vector<double>> scenario_arrivals(const ExperimentConfig& cfg, const Scenario& s, int rows) {
  const DemandLevel& lvl = cfg.demand.find(s.demand);
  TrapezoidShape shape{cfg.demand.ramp_up, cfg.demand.plateau, cfg.demand.ramp_down, lvl.level};
  std::vector<std::vector<double>> out(static_cast<std::size_t>(rows), std::vector<double>(cfg.gates.size()));
  for (std::size_t o = 0; o < cfg.gates.size(); ++o) {
    const Gate& g = cfg.gates[o];
    const int span = std::max(rows, shape.ramp_up + shape.plateau + shape.ramp_down);
    const std::vector<double> ext = make_trapezoid(g, shape, span);
    const double base = cfg.background == Background::nominal ? g.q_nom : 0.0;
    for (int k = 0; k < rows; ++k) out[static_cast<std::size_t>(k)][o] = base + ext[static_cast<std::size_t>(k)];
  }
  return out;
}

std::unique_ptr<GatePolicy> make_policy(const ExperimentConfig& cfg, const Scenario& s) {
  MgcConfig mc = cfg.controller;
  mc.horizon = s.control_horizon;
  switch (s.policy) {
    case Policy::mgc:
      return std::make_unique<MgcPolicy>(MgcController(cfg.nfd(), cfg.gates, cfg.plant.period_h, mc));
    case Policy::cap:
    case Policy::oap:
      return std::make_unique<AllocationPolicy>(
          s.policy, SisoController(cfg.nfd(), cfg.gates, cfg.plant.period_h, mc), cfg.gates);
    case Policy::none:
      return std::make_unique<NoControlPolicy>(cfg.gates);
  }
  throw std::invalid_argument("unknown policy");
}

RunResult run_scenario(const ExperimentConfig& cfg, const Scenario& s) {
  if (!(s.n0 >= 0.0 && s.n0 <= cfg.nfd().n_max)) throw ConfigError("scenario " + s.name + ": n0 outside [0, n_max]");
  if (!(s.queue_init_fraction >= 0.0 && s.queue_init_fraction <= 1.0))
    throw ConfigError("scenario " + s.name + ": queue_init_fraction outside [0, 1]");
  if (s.horizon < 1) throw ConfigError("scenario " + s.name + ": horizon must be at least 1");

  const Plant plant(cfg.plant, cfg.gates);
  auto policy = make_policy(cfg, s);

  std::vector<double> transit;
  for (const Gate& g : cfg.gates) transit.push_back(g.q_nom);
  ClosedLoopSetup setup;
  setup.initial = NetworkState::initial(cfg.gates, s.n0, s.queue_init_fraction, transit);
  setup.arrivals = scenario_arrivals(cfg, s, s.horizon + policy->lookahead());
  setup.horizon = s.horizon;
  setup.seed = s.seed;
  setup.disturbance = cfg.disturbance;

  RunResult r;
  r.scenario = s;
  r.trajectory = run_rolling_horizon(plant, *policy, setup);
  const Trajectory& t = r.trajectory;
  RunMetrics& m = r.metrics;
  m.tts = tts(t);
  m.tts_network = tts_network(t);
  m.tts_gates = tts_gates(t);
  m.tts_gates_avg = tts_gates_average(t);
  m.rqb = rqb(t, cfg.gates, cfg.nfd().n_max);
  m.served = t.ledger.outflow;
  m.gridlock_events = t.ledger.gridlock_events;
  for (const auto& d : t.diagnostics) {
    m.clip_events += d.clipped;
    if (d.fallback) ++m.fallback_steps;
  }
  m.conservation_residual = t.ledger.residual();
  m.clamped = t.ledger.clamped;
  m.conserved = t.ledger.holds();
  r.ok = true;
  return r;
}

namespace {

RunResult guarded_run(const ExperimentConfig& cfg, const Scenario& s, bool keep) {
  RunResult r;
  try {
    r = run_scenario(cfg, s);
  } catch (const std::exception& e) {
    r = RunResult{};
    r.scenario = s;
    r.ok = false;
    r.error = e.what();
  }
  if (!keep) {
    r.trajectory.rows.clear();
    r.trajectory.diagnostics.clear();
  }
  return r;
}

}  // namespace

std::vector<RunResult> run_batch(const ExperimentConfig& cfg, const std::vector<Scenario>& scenarios,
                                 Execution mode, bool keep_trajectories) {
  std::vector<RunResult> out(scenarios.size());
  const auto n = static_cast<long>(scenarios.size());
  if (mode == Execution::serial) {
    for (long i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = guarded_run(cfg, scenarios[static_cast<std::size_t>(i)], keep_trajectories);
  } else {
#pragma omp parallel for schedule(dynamic, 1)
    for (long i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = guarded_run(cfg, scenarios[static_cast<std::size_t>(i)], keep_trajectories);
  }
  return out;
}

std::vector<Scenario> grid_scenarios(const ExperimentConfig& cfg, Policy policy) {
  std::vector<Scenario> out;
  for (double n0 : cfg.grid.initial_accumulations) {
    for (const auto& d : cfg.grid.demands) {
      Scenario s;
      std::ostringstream name;
      name << "n" << static_cast<long long>(std::llround(n0)) << "_" << d;
      s.name = name.str();
      s.n0 = n0;
      s.queue_init_fraction = cfg.grid.queue_init_fraction;
      s.demand = d;
      s.horizon = cfg.grid.horizon;
      s.control_horizon = cfg.controller.horizon;
      s.seed = cfg.grid.seed;
      s.policy = policy;
      out.push_back(std::move(s));
    }
  }
  return out;
}

SweepResult sweep_horizons(const ExperimentConfig& cfg, const std::vector<Scenario>& base,
                           const std::vector<int>& horizons, Execution mode) {
  if (base.empty() || horizons.empty()) throw std::invalid_argument("sweep needs scenarios and horizons");
  std::vector<Scenario> runs;
  for (const auto& s : base) {
    for (int h : horizons) {
      Scenario x = s;
      x.policy = Policy::mgc;
      x.control_horizon = h;
      runs.push_back(std::move(x));
    }
  }
  const auto results = run_batch(cfg, runs, mode, false);

  SweepResult out;
  for (const auto& r : results) {
    SweepRow row;
    row.scenario = r.scenario.name;
    row.control_horizon = r.scenario.control_horizon;
    row.ok = r.ok;
    row.error = r.error;
    row.tts = r.metrics.tts;
    row.tts_gates_avg = r.metrics.tts_gates_avg;
    row.rqb = r.metrics.rqb;
    row.conserved = r.metrics.conserved;
    out.rows.push_back(std::move(row));
  }
  std::stable_sort(out.rows.begin(), out.rows.end(), [](const SweepRow& a, const SweepRow& b) {
    return a.scenario != b.scenario ? a.scenario < b.scenario : a.control_horizon < b.control_horizon;
  });

  std::map<std::string, std::vector<SweepRow*>> by_scenario;
  for (auto& row : out.rows) by_scenario[row.scenario].push_back(&row);
  for (auto& [name, rows] : by_scenario) {
    SweepRow* best = nullptr;
    std::vector<double> tail;
    for (SweepRow* r : rows) {
      if (!r->ok) continue;
      if (!best || r->tts < best->tts) best = r;
      if (r->control_horizon >= cfg.sweep.spread_from) tail.push_back(r->tts);
    }
    if (best) best->best = true;
    double spread = 0.0;
    if (!tail.empty()) {
      double mean = 0.0;
      for (double v : tail) mean += v;
      mean /= static_cast<double>(tail.size());
      for (double v : tail) spread = std::max(spread, std::abs(v - mean) / mean);
    }
    out.spread.emplace_back(name, spread);
  }
  return out;
}

std::vector<RunResult> compare_policies(const ExperimentConfig& cfg, const std::vector<Scenario>& base,
                                        const std::vector<Policy>& policies, Execution mode) {
  std::vector<Scenario> runs;
  for (const auto& s : base) {
    for (Policy p : policies) {
      Scenario x = s;
      x.policy = p;
      runs.push_back(std::move(x));
    }
  }
  return run_batch(cfg, runs, mode, false);
}

}  // namespace perimeter
