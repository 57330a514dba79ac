#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "perimeter/allocation.hpp"
#include "perimeter/config.hpp"
#include "perimeter/csv.hpp"
#include "perimeter/experiment.hpp"
#include "perimeter/matrix_io.hpp"

namespace fs = std::filesystem;
using namespace perimeter;

namespace {

constexpr int kExitOther = 1;
constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;

struct Options {
  std::string config = "data/san_francisco.json";
  std::vector<std::string> scenarios;
  std::vector<std::string> policies;
  std::vector<int> horizons;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "out";
  bool serial = false;
};

std::ofstream open_out(const fs::path& p) {
  std::ofstream f(p);
  if (!f) throw std::runtime_error(p.string() + ": cannot write");
  return f;
}

std::vector<Scenario> select(const ExperimentConfig& cfg, const Options& opt, Policy policy) {
  std::vector<Scenario> all = grid_scenarios(cfg, policy);
  if (opt.seed)
    for (auto& s : all) s.seed = *opt.seed;
  if (opt.horizons.size() == 1)
    for (auto& s : all) s.control_horizon = opt.horizons.front();
  if (opt.scenarios.empty()) return all;
  std::vector<Scenario> out;
  for (const auto& name : opt.scenarios) {
    bool found = false;
    for (const auto& s : all) {
      if (s.name == name) {
        out.push_back(s);
        found = true;
      }
    }
    if (!found) {
      std::string known;
      for (const auto& s : all) known += " " + s.name;
      throw ConfigError("--scenario: unknown scenario '" + name + "'; known:" + known);
    }
  }
  return out;
}

std::vector<Policy> policies_of(const Options& opt, std::vector<Policy> fallback) {
  if (opt.policies.empty()) return fallback;
  std::vector<Policy> out;
  for (const auto& p : opt.policies) {
    try {
      out.push_back(parse_policy(p));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("--policy: ") + e.what());
    }
  }
  return out;
}

void print_run(const RunResult& r) {
  std::cout << r.scenario.name << " policy=" << to_string(r.scenario.policy)
            << " N_o=" << r.scenario.control_horizon;
  if (!r.ok) {
    std::cout << " FAILED: " << r.error << '\n';
    return;
  }
  const auto& m = r.metrics;
  std::cout << " tts=" << m.tts << " tts_pn=" << m.tts_network << " tts_gates_avg=" << m.tts_gates_avg
            << " rqb=" << m.rqb << " gridlock=" << m.gridlock_events << " fallback=" << m.fallback_steps
            << " conserved=" << (m.conserved ? "yes" : "no") << '\n';
}

int cmd_simulate(const Options& opt) {
  const ExperimentConfig cfg = load_config(opt.config);
  const auto pol = policies_of(opt, {Policy::mgc});
  if (pol.size() != 1) throw ConfigError("--policy: simulate takes exactly one policy");
  Options o = opt;
  if (o.scenarios.empty()) o.scenarios = {grid_scenarios(cfg).front().name};
  if (o.scenarios.size() != 1) throw ConfigError("--scenario: simulate takes exactly one scenario");
  if (o.horizons.size() > 1) throw ConfigError("--no: simulate takes one horizon");
  const Scenario s = select(cfg, o, pol.front()).front();

  const RunResult r = run_scenario(cfg, s);
  fs::create_directories(opt.out_dir);
  const fs::path dir(opt.out_dir);
  {
    auto f = open_out(dir / "trajectory.csv");
    write_trajectory_csv(f, r.trajectory);
  }
  {
    auto f = open_out(dir / "diagnostics.csv");
    write_diagnostics_csv(f, r.trajectory);
  }
  {
    auto f = open_out(dir / "metrics.csv");
    write_metrics_csv(f, {r});
  }
  print_run(r);
  return 0;
}

int cmd_sweep(const Options& opt) {
  const ExperimentConfig cfg = load_config(opt.config);
  Options o = opt;
  const std::vector<int> horizons = opt.horizons.empty() ? cfg.sweep.horizons : opt.horizons;
  o.horizons.clear();
  const auto base = select(cfg, o, Policy::mgc);
  const SweepResult res =
      sweep_horizons(cfg, base, horizons, opt.serial ? Execution::serial : Execution::parallel);
  fs::create_directories(opt.out_dir);
  {
    auto f = open_out(fs::path(opt.out_dir) / "sweep.csv");
    write_sweep_csv(f, res);
  }
  int failed = 0;
  for (const auto& r : res.rows) failed += r.ok ? 0 : 1;
  for (const auto& [name, spread] : res.spread) {
    int best = 0;
    for (const auto& r : res.rows)
      if (r.scenario == name && r.best) best = r.control_horizon;
    std::cout << name << " best_N_o=" << best << " spread(N_o>=" << cfg.sweep.spread_from << ")=" << spread
              << (spread <= cfg.sweep.spread_threshold ? "" : " [above threshold]") << '\n';
  }
  std::cout << res.rows.size() << " runs, " << failed << " failed\n";
  return 0;
}

int cmd_compare(const Options& opt) {
  const ExperimentConfig cfg = load_config(opt.config);
  const auto pols = policies_of(opt, {Policy::mgc, Policy::cap, Policy::oap, Policy::none});
  if (opt.horizons.size() > 1) throw ConfigError("--no: compare takes one horizon");
  const auto base = select(cfg, opt, Policy::mgc);
  const auto runs = compare_policies(cfg, base, pols, opt.serial ? Execution::serial : Execution::parallel);
  fs::create_directories(opt.out_dir);
  const fs::path dir(opt.out_dir);
  {
    auto f = open_out(dir / "comparison.csv");
    write_comparison_csv(f, runs);
  }
  {
    auto f = open_out(dir / "comparison_pivot.csv");
    write_comparison_pivot(f, runs);
  }
  {
    auto f = open_out(dir / "metrics.csv");
    write_metrics_csv(f, runs);
  }
  for (const auto& r : runs) print_run(r);
  return 0;
}

int cmd_dump(const Options& opt) {
  const ExperimentConfig cfg = load_config(opt.config);
  Options o = opt;
  if (o.scenarios.empty()) o.scenarios = {grid_scenarios(cfg).front().name};
  if (o.horizons.size() > 1) throw ConfigError("--no: dump-matrices takes one horizon");
  const Scenario s = select(cfg, o, Policy::mgc).front();
  MgcConfig mc = cfg.controller;
  mc.horizon = s.control_horizon;
  const MgcController ctl(cfg.nfd(), cfg.gates, cfg.plant.period_h, mc);
  const fs::path dir(opt.out_dir);
  save_condensed(dir / "condensed", ctl.model(), ctl.condensed());

  std::vector<double> transit;
  for (const Gate& g : cfg.gates) transit.push_back(g.q_nom);
  const NetworkState x0 = NetworkState::initial(cfg.gates, s.n0, s.queue_init_fraction, transit);
  const auto arrivals = scenario_arrivals(cfg, s, mc.horizon);
  const auto dx0 = ctl.deviation(x0);
  const auto dD = ctl.disturbance_deviation(arrivals, 0.0);
  save_problem(dir / "problem", ctl.condensed().problem(dx0, dD, mc.state_constraints));
  std::cout << "wrote " << (dir / "condensed").string() << " and " << (dir / "problem").string()
            << " for " << s.name << " N_o=" << mc.horizon << '\n';
  return 0;
}

void add_common(CLI::App* sub, Options& opt, bool multi_policy, bool multi_horizon) {
  sub->add_option("--config", opt.config, "Configuration file (JSON)")->capture_default_str();
  sub->add_option("--scenario", opt.scenarios, "Scenario name(s), e.g. n3000_none");
  if (multi_policy)
    sub->add_option("--policy", opt.policies, "Policies: mgc, cap, oap, none");
  else
    sub->add_option("--policy", opt.policies, "Policy: mgc, cap, oap or none")->expected(1);
  if (multi_horizon)
    sub->add_option("--no", opt.horizons, "Controller horizon(s) N_o");
  else
    sub->add_option("--no", opt.horizons, "Controller horizon N_o")->expected(1);
  sub->add_option("--seed", opt.seed, "Disturbance seed");
  sub->add_option("--out-dir", opt.out_dir, "Output directory")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-gate perimeter flow control experiments"};
  app.require_subcommand(1);
  Options opt;

  auto* sim = app.add_subcommand("simulate", "Run one scenario and write trajectory, diagnostics and metrics");
  add_common(sim, opt, false, false);
  auto* sweep = app.add_subcommand("sweep-no", "Sweep the controller horizon over the scenario grid");
  add_common(sweep, opt, false, true);
  sweep->add_flag("--serial", opt.serial, "Run without threads");
  auto* cmp = app.add_subcommand("compare", "Compare gating policies over the scenario grid");
  add_common(cmp, opt, true, false);
  cmp->add_flag("--serial", opt.serial, "Run without threads");
  auto* dump = app.add_subcommand("dump-matrices", "Write model, condensed matrices and one QP instance as CSV");
  add_common(dump, opt, false, false);

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) return cmd_simulate(opt);
    if (sweep->parsed()) return cmd_sweep(opt);
    if (cmp->parsed()) return cmd_compare(opt);
    if (dump->parsed()) return cmd_dump(opt);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const SolverError& e) {
    std::cerr << "solver error: " << e.what() << '\n';
    return kExitSolver;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitOther;
  }
  return kExitOther;
}
