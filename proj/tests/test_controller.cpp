#include "doctest.h"

#include <numeric>

#include "perimeter/controller.hpp"
#include "support.hpp"

using namespace perimeter;

namespace {

DemandForecast nominal_forecast(const std::vector<Gate>& gates, int rows, double extra = 0.0) {
  std::vector<double> row;
  for (const auto& g : gates) row.push_back(g.q_nom + extra);
  return DemandForecast(static_cast<std::size_t>(rows), row);
}

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

}  // namespace

TEST_CASE("at the set point the controller holds the nominal flows") {
  const auto cfg = testing_support::san_francisco();
  MgcController ctl(cfg.nfd(), cfg.gates, 0.05, cfg.controller);
  const NetworkState x = NetworkState::initial(cfg.gates, 4000.0, 0.0);
  const MgcDecision d = ctl.step(x, nominal_forecast(cfg.gates, 15));
  REQUIRE(d.qp.status == QpStatus::optimal);
  CHECK_FALSE(d.fallback);
  for (std::size_t o = 0; o < cfg.gates.size(); ++o) {
    CHECK(d.command[o] == doctest::Approx(cfg.gates[o].q_nom).epsilon(1e-9));
    CHECK(d.green_s[o] == doctest::Approx(cfg.gates[o].g_nom_s).epsilon(1e-9));
  }
}

TEST_CASE("commands stay within gate limits and tighten with accumulation") {
  const auto cfg = testing_support::san_francisco();
  MgcController ctl(cfg.nfd(), cfg.gates, 0.05, cfg.controller);
  double previous = 1e300;
  for (double n : {2000.0, 3000.0, 4000.0, 5000.0, 6000.0}) {
    const NetworkState x = NetworkState::initial(cfg.gates, n, 0.2);
    const MgcDecision d = ctl.step(x, nominal_forecast(cfg.gates, 15));
    REQUIRE(d.qp.status == QpStatus::optimal);
    for (std::size_t o = 0; o < cfg.gates.size(); ++o) {
      CHECK(d.command[o] >= cfg.gates[o].q_min);
      CHECK(d.command[o] <= cfg.gates[o].q_max);
    }
    CHECK(sum(d.command) <= previous + 1e-6);
    previous = sum(d.command);
    CHECK(d.qp.kkt.primal < 1e-6);
  }
}

TEST_CASE("unavoidable queue overflow triggers the fallback") {
  const auto cfg = testing_support::san_francisco();
  MgcController ctl(cfg.nfd(), cfg.gates, 0.05, cfg.controller);
  const NetworkState x = NetworkState::initial(cfg.gates, 4000.0, 1.0);
  const auto forecast = nominal_forecast(cfg.gates, 15, 20000.0);
  const MgcDecision d = ctl.step(x, forecast);
  CHECK(d.fallback);
  CHECK(d.qp.status == QpStatus::optimal);

  MgcConfig strict = cfg.controller;
  strict.fallback = FallbackPolicy::fail;
  MgcController hard(cfg.nfd(), cfg.gates, 0.05, strict);
  CHECK_THROWS_AS((void)hard.step(x, forecast), SolverError);
}

TEST_CASE("delay-chain deviation reads the transit buffer newest first") {
  std::vector<Gate> gates{testing_support::simple_gate(1, 200.0, 1800.0, 90.0, 10.0, 45.0, 80.0, 2),
                          testing_support::simple_gate(2, 300.0)};
  MgcConfig mc;
  mc.horizon = 3;
  MgcController ctl(NfdParams{}, gates, 0.05, mc);
  REQUIRE(ctl.model().nx() == 5);
  NetworkState x = NetworkState::initial(gates, 4100.0, 0.5);
  x.in_transit[0] = {700.0, 800.0};  // 700 released two periods ago
  const auto dx = ctl.deviation(x);
  CHECK(dx(0) == doctest::Approx(100.0));
  CHECK(dx(1) == doctest::Approx(100.0));
  CHECK(dx(2) == doctest::Approx(150.0));
  CHECK(dx(3) == doctest::Approx(800.0 - gates[0].q_nom));
  CHECK(dx(4) == doctest::Approx(700.0 - gates[0].q_nom));
}

TEST_CASE("disturbance deviation uses arrivals above nominal") {
  const auto cfg = testing_support::san_francisco();
  MgcConfig mc = cfg.controller;
  mc.horizon = 3;
  MgcController ctl(cfg.nfd(), cfg.gates, 0.05, mc);
  const auto dD = ctl.disturbance_deviation(nominal_forecast(cfg.gates, 2, 100.0), 250.0);
  const auto nd = ctl.model().nd();
  CHECK(dD.size() == 3 * nd);
  CHECK(dD(0) == 250.0);
  CHECK(dD(1) == doctest::Approx(100.0));
  // Rows beyond the forecast are treated as zero arrivals.
  CHECK(dD(2 * nd + 1) == doctest::Approx(-cfg.gates[0].q_nom));
}

TEST_CASE("single-region controller") {
  const auto cfg = testing_support::san_francisco();
  SisoController siso(cfg.nfd(), cfg.gates, 0.05, cfg.controller);
  CHECK(siso.step(4000.0).global_flow == doctest::Approx(37400.0).epsilon(1e-9));
  const double low = siso.step(8000.0).global_flow;
  const double high = siso.step(2000.0).global_flow;
  CHECK(low < 37400.0);
  CHECK(high > 37400.0);
  CHECK(low >= 7490.0 - 1e-6);
  CHECK(high <= 59110.0 + 1e-6);
}

TEST_CASE("closed loop logs every step and conserves vehicles") {
  const auto cfg = testing_support::san_francisco();
  const Plant plant(cfg.plant, cfg.gates);
  MgcConfig mc = cfg.controller;
  mc.horizon = 5;
  MgcPolicy policy(MgcController(cfg.nfd(), cfg.gates, 0.05, mc));
  ClosedLoopSetup setup;
  setup.initial = NetworkState::initial(cfg.gates, 7000.0, 0.7);
  setup.arrivals = nominal_forecast(cfg.gates, 20);
  setup.horizon = 12;
  setup.seed = 3;
  const Trajectory t = run_rolling_horizon(plant, policy, setup);
  CHECK(t.rows.size() == 13);
  CHECK(t.diagnostics.size() == 12);
  CHECK(t.rows.front().n == 7000.0);
  CHECK(t.ledger.holds(1e-9));
  for (const auto& d : t.diagnostics) CHECK(d.status == "optimal");
}

TEST_CASE("configuration validation") {
  MgcConfig mc;
  mc.horizon = 0;
  CHECK_THROWS_AS(mc.validate(), std::invalid_argument);
  mc = MgcConfig{};
  mc.r = 0.0;
  CHECK_THROWS_AS(mc.validate(), std::invalid_argument);
}
