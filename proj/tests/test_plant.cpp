#include "doctest.h"

#include <cmath>
#include <deque>
#include <random>

#include "perimeter/plant.hpp"
#include "support.hpp"

using namespace perimeter;
using testing_support::simple_gate;

namespace {

double sum(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

}  // namespace

TEST_CASE("gate flows follow the signal plan") {
  const Gate g = simple_gate(1, 200.0, 1800.0, 90.0, 10.0, 45.0, 80.0);
  CHECK(g.q_min == doctest::Approx(200.0));
  CHECK(g.q_nom == doctest::Approx(900.0));
  CHECK(g.q_max == doctest::Approx(1600.0));
  CHECK(g.green_for_flow(900.0) == doctest::Approx(45.0));
  CHECK_NOTHROW(g.validate());

  Gate bad = g;
  bad.q_nom *= 1.001;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = g;
  bad.g_max_s = 95.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = g;
  bad.storage = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("gate outflow cases") {
  const Gate g = simple_gate(1, 200.0);
  const double n_max = 13000.0, c = 0.9, Tl = 0.005;
  CHECK(gate_outflow(0.95 * n_max, 150.0, 1500.0, 400.0, g, c, n_max, Tl) == doctest::Approx(g.q_min));
  CHECK(gate_outflow(0.9 * n_max, 150.0, 0.0, 0.0, g, c, n_max, Tl) == doctest::Approx(g.q_min));
  CHECK(gate_outflow(4000.0, 0.0, 1500.0, 0.0, g, c, n_max, Tl) == 0.0);
  CHECK(gate_outflow(4000.0, 1e6, 1e9, 0.0, g, c, n_max, Tl) == doctest::Approx(g.q_max));
  CHECK(gate_outflow(4000.0, 1e6, 700.0, 0.0, g, c, n_max, Tl) == doctest::Approx(700.0));
  // Little stored: demand plus the drainable queue limits the release.
  CHECK(gate_outflow(4000.0, 1.0, 1500.0, 100.0, g, c, n_max, Tl) == doctest::Approx(100.0 + 1.0 / Tl));
}

TEST_CASE("single Euler step of a queue") {
  // l = 100, d = 500, q = 300, T = 0.05, m = 1 -> 110.
  Gate g = simple_gate(1, 1000.0, 1800.0, 90.0, 10.0, 15.0, 80.0);
  PlantParams pp;
  pp.substeps = 1;
  const Plant plant(pp, {g});
  NetworkState s = NetworkState::initial(plant.gates(), 3000.0, 0.1);
  const std::vector<double> cmd{300.0}, arr{500.0};
  const NetworkState next = plant.step(s, cmd, arr, 0.0);
  CHECK(next.queue[0] == doctest::Approx(110.0).epsilon(1e-14));
}

TEST_CASE("pure emptying with no inflow") {
  const Gate g = simple_gate(1, 200.0);
  const Plant plant(PlantParams{}, {g});
  NetworkState s = NetworkState::initial(plant.gates(), 8000.0, 0.0);
  StepRecord rec;
  const std::vector<double> zero{0.0};
  const NetworkState next = plant.step(s, zero, zero, 0.0, &rec);
  CHECK(next.n == doctest::Approx(8000.0 - 0.05 * output(NfdParams{}, 8000.0)).epsilon(1e-14));
  CHECK(next.queue[0] == 0.0);
  CHECK(rec.released[0] == 0.0);
}

TEST_CASE("nominal flows at the matching accumulation form a fixed point") {
  const auto cfg = testing_support::san_francisco();
  const Plant plant(cfg.plant, cfg.gates);
  std::vector<double> nominal;
  for (const auto& g : cfg.gates) nominal.push_back(g.q_nom);
  const double target = sum(nominal);
  // Bisection on the increasing branch for output(n) = sum q_nom.
  double lo = 0.0, hi = critical_accumulation(cfg.nfd());
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (output(cfg.nfd(), mid) < target ? lo : hi) = mid;
  }
  const double n_hat = 0.5 * (lo + hi);
  NetworkState s = NetworkState::initial(cfg.gates, n_hat, 0.0);
  for (int k = 0; k < 40; ++k) {
    const NetworkState next = plant.step(s, nominal, nominal, 0.0);
    CHECK(std::abs(next.n - s.n) <= 1e-9 * n_hat);
    for (double l : next.queue) CHECK(l == doctest::Approx(0.0));
    s = next;
  }
}

TEST_CASE("overflow beyond storage becomes a virtual queue and drains back") {
  const Gate g = simple_gate(1, 100.0);
  const Plant plant(PlantParams{}, {g});
  NetworkState s = NetworkState::initial(plant.gates(), 3000.0, 1.0);
  const std::vector<double> lo{g.q_min}, arr{g.q_min + 4000.0};
  s = plant.step(s, lo, arr, 0.0);
  CHECK(s.queue[0] == doctest::Approx(100.0));
  CHECK(s.virtual_queue[0] == doctest::Approx(0.05 * 4000.0));
  const std::vector<double> hi{g.q_max}, none{0.0};
  for (int k = 0; k < 10; ++k) {
    s = plant.step(s, hi, none, 0.0);
    CHECK(s.queue[0] >= 0.0);
    CHECK(s.queue[0] <= g.storage + 1e-12);
    CHECK(s.virtual_queue[0] >= 0.0);
    if (s.virtual_queue[0] > 0.0) CHECK(s.queue[0] == doctest::Approx(g.storage));
  }
  CHECK(s.virtual_queue[0] < 200.0);
}

TEST_CASE("overflow protection forces q_min at every gate") {
  const auto cfg = testing_support::san_francisco();
  const Plant plant(cfg.plant, cfg.gates);
  NetworkState s = NetworkState::initial(cfg.gates, 0.92 * cfg.nfd().n_max, 1.0);
  std::vector<double> cmd, arr(cfg.gates.size(), 0.0);
  for (const auto& g : cfg.gates) cmd.push_back(g.q_max);
  StepRecord rec;
  (void)plant.step(s, cmd, arr, 0.0, &rec);
  for (std::size_t o = 0; o < cfg.gates.size(); ++o) CHECK(rec.released[o] == doctest::Approx(cfg.gates[o].q_min));
}

TEST_CASE("delayed releases reach the network after kappa periods") {
  std::mt19937_64 rng(7);
  for (int kappa = 0; kappa <= 3; ++kappa) {
    const Gate g = simple_gate(1, 1e6, 1800.0, 90.0, 10.0, 45.0, 80.0, kappa);
    PlantParams pp;
    pp.substeps = 1;
    const Plant plant(pp, {g});
    NetworkState s = NetworkState::initial(plant.gates(), 2000.0, 0.5, std::vector<double>{g.q_nom});
    std::uniform_real_distribution<double> u(g.q_min, g.q_max);
    // Oracle: n(k+1) = n(k) + T (q(k - kappa) - output(n(k))), with q(j<0) = q_nom.
    std::vector<double> history;
    double n = s.n;
    for (int k = 0; k < 20; ++k) {
      const std::vector<double> cmd{u(rng)}, arr{0.0};
      StepRecord rec;
      s = plant.step(s, cmd, arr, 0.0, &rec);
      history.push_back(rec.released[0]);
      const int j = k - kappa;
      const double in = j >= 0 ? history[static_cast<std::size_t>(j)] : g.q_nom;
      n = n + 0.05 * (in - output(NfdParams{}, n));
      CHECK(s.n == doctest::Approx(n).epsilon(1e-12));
      CHECK(s.in_transit[0].size() == static_cast<std::size_t>(kappa));
    }
  }
}

TEST_CASE("vehicle conservation over random runs") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 30; ++trial) {
    const auto gates = testing_support::random_gates(rng, 4, 2);
    const Plant plant(PlantParams{}, gates);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> transit;
    for (const auto& g : gates) transit.push_back(g.q_nom);
    NetworkState s = NetworkState::initial(gates, 13000.0 * u(rng), u(rng), transit);
    const double initial = s.total_vehicles(0.05);
    double inflow = 0.0, out = 0.0, clamp = 0.0;
    for (int k = 0; k < 40; ++k) {
      std::vector<double> cmd, arr;
      for (const auto& g : gates) {
        cmd.push_back(g.q_min + (g.q_max - g.q_min) * u(rng));
        arr.push_back(3000.0 * u(rng));
      }
      const double dn = make_disturbance(trial, k, s.n, DisturbanceSpec{});
      StepRecord rec;
      s = plant.step(s, cmd, arr, dn, &rec);
      inflow += 0.05 * (sum(arr) + dn);
      out += 0.05 * rec.exit_flow;
      clamp += rec.clamped_vehicles;
      CHECK(s.n >= 0.0);
      CHECK(s.n <= 13000.0);
      for (std::size_t o = 0; o < gates.size(); ++o) {
        CHECK(s.queue[o] >= 0.0);
        CHECK(s.queue[o] <= gates[o].storage * (1 + 1e-12));
        CHECK(s.virtual_queue[o] >= 0.0);
      }
    }
    const double final_total = s.total_vehicles(0.05);
    CHECK(std::abs(final_total - initial - (inflow - out + clamp)) <= 1e-6 * std::max(initial, inflow));
  }
}

TEST_CASE("disturbance is deterministic, bounded and zero below the threshold") {
  const DisturbanceSpec spec;
  CHECK(make_disturbance(1, 0, 3000.0, spec) == 0.0);
  CHECK(make_disturbance(1, 0, 6000.0, spec) == 0.0);
  double lo = 1e9, hi = -1e9;
  for (int k = 0; k < 2000; ++k) {
    const double d = make_disturbance(42, k, 7000.0, spec);
    CHECK(d == make_disturbance(42, k, 7000.0, spec));
    CHECK(std::abs(d) <= 5000.0);
    lo = std::min(lo, d);
    hi = std::max(hi, d);
  }
  CHECK(lo < -4500.0);
  CHECK(hi > 4500.0);
  CHECK(make_disturbance(42, 3, 7000.0, spec) != make_disturbance(43, 3, 7000.0, spec));
  DisturbanceSpec zero = spec;
  zero.half_range = 0.0;
  CHECK(make_disturbance(42, 3, 9000.0, zero) == 0.0);
}

TEST_CASE("trapezoid demand") {
  const Gate g = simple_gate(1, 100.0);
  auto flat = make_trapezoid(g, TrapezoidShape{5, 15, 5, 0.0}, 40);
  for (double v : flat) CHECK(v == 0.0);

  auto t = make_trapezoid(g, TrapezoidShape{5, 15, 5, 0.25}, 40);
  REQUIRE(t.size() == 40);
  CHECK(t[0] == doctest::Approx(450.0 / 6));
  CHECK(t[4] == doctest::Approx(450.0 * 5 / 6));
  for (int k = 5; k < 20; ++k) CHECK(t[static_cast<std::size_t>(k)] == doctest::Approx(450.0));
  CHECK(t[20] == doctest::Approx(450.0 * 5 / 6));
  CHECK(t[24] == doctest::Approx(450.0 / 6));
  for (int k = 25; k < 40; ++k) CHECK(t[static_cast<std::size_t>(k)] == 0.0);

  auto pulse = make_trapezoid(g, TrapezoidShape{0, 3, 0, 0.4}, 5);
  CHECK(pulse == std::vector<double>{720.0, 720.0, 720.0, 0.0, 0.0});

  CHECK_THROWS((void)make_trapezoid(g, TrapezoidShape{5, 15, 5, 0.25}, 20));
  CHECK_THROWS((void)make_trapezoid(g, TrapezoidShape{5, 15, 5, 1.5}, 40));
}

TEST_CASE("replay is bit-identical") {
  const auto cfg = testing_support::san_francisco();
  const Plant plant(cfg.plant, cfg.gates);
  auto run = [&] {
    NetworkState s = NetworkState::initial(cfg.gates, 9000.0, 0.7);
    std::vector<double> cmd, arr;
    for (const auto& g : cfg.gates) {
      cmd.push_back(g.q_nom);
      arr.push_back(g.q_nom + 200.0);
    }
    for (int k = 0; k < 40; ++k) s = plant.step(s, cmd, arr, make_disturbance(5, k, s.n, cfg.disturbance));
    return s;
  };
  const NetworkState a = run(), b = run();
  CHECK(a.n == b.n);
  CHECK(a.queue == b.queue);
  CHECK(a.virtual_queue == b.virtual_queue);
}
