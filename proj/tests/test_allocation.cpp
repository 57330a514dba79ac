#include "doctest.h"

#include <numeric>
#include <random>

#include "perimeter/allocation.hpp"
#include "support.hpp"

using namespace perimeter;
using testing_support::simple_gate;

namespace {

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

// Gate with explicit flows; S = 36000, C = 3600 so q = 10 g.
Gate flow_gate(int id, double storage, double qmin, double qnom, double qmax) {
  return Gate::from_signal_plan(id, storage, 36000.0, 3600.0, qmin / 10, qnom / 10, qmax / 10);
}

// Bounded minimiser of sum (q - qhat)^2 / (2 qhat) with sum q = qG: each
// q_o = clamp(qhat_o (1 + t)) for the t that meets the total, found by bisection.
std::vector<double> water_fill(double qG, const std::vector<Gate>& gates) {
  auto total = [&](double t) {
    double s = 0.0;
    for (const auto& g : gates) s += std::clamp(g.q_nom * (1 + t), g.q_min, g.q_max);
    return s;
  };
  double lo = -1.0, hi = 1.0;
  while (total(hi) < qG) hi *= 2.0;
  for (int i = 0; i < 300; ++i) {
    const double mid = 0.5 * (lo + hi);
    (total(mid) < qG ? lo : hi) = mid;
  }
  std::vector<double> q;
  for (const auto& g : gates) q.push_back(std::clamp(g.q_nom * (1 + 0.5 * (lo + hi)), g.q_min, g.q_max));
  return q;
}

}  // namespace

TEST_CASE("capacity ratios") {
  CHECK(cap_ratios(std::vector<Gate>{simple_gate(1, 100.0), simple_gate(2, 100.0)}) == std::vector<double>{0.5, 0.5});
  CHECK(cap_ratios(std::vector<Gate>{simple_gate(1, 42.0)}) == std::vector<double>{1.0});

  const auto cfg = testing_support::san_francisco();
  const auto r = cap_ratios(cfg.gates);
  const std::vector<double> expected{6.2, 5.3, 8.0, 4.8, 4.6, 5.3, 5.3, 5.3, 14.4, 13.1, 5.3, 5.0, 4.1, 4.1, 9.1};
  REQUIRE(r.size() == expected.size());
  for (std::size_t o = 0; o < r.size(); ++o) CHECK(100.0 * r[o] == doctest::Approx(expected[o]).epsilon(0.01));
  CHECK(sum(r) == 1.0);

  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    const auto gates = testing_support::random_gates(rng, 1 + static_cast<int>(rng() % 15));
    CHECK(sum(cap_ratios(gates)) == 1.0);
  }
}

TEST_CASE("capacity-based allocation") {
  const std::vector<Gate> two{flow_gate(1, 100.0, 100.0, 600.0, 1500.0), flow_gate(2, 100.0, 100.0, 400.0, 1500.0)};
  auto a = cap_allocate(1000.0, two);
  CHECK(a.q == std::vector<double>{600.0, 400.0});
  CHECK(a.wasted == 0.0);
  a = cap_allocate(1200.0, two);
  CHECK(a.q[0] == doctest::Approx(700.0));
  CHECK(a.q[1] == doctest::Approx(500.0));
  a = cap_allocate(50.0, two);
  CHECK(a.q == std::vector<double>{100.0, 100.0});
  CHECK(a.deficit > 0.0);
  CHECK(sum(a.q) + a.wasted - a.deficit == doctest::Approx(50.0));
  a = cap_allocate(5000.0, two);
  CHECK(a.q == std::vector<double>{1500.0, 1500.0});
  CHECK(a.wasted == doctest::Approx(2000.0));
}

TEST_CASE("capacity-based allocation properties on random gate sets") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const auto gates = testing_support::random_gates(rng, 1 + static_cast<int>(rng() % 15));
    double nominal = 0.0, lo = 0.0, hi = 0.0;
    for (const auto& g : gates) {
      nominal += g.q_nom;
      lo += g.q_min;
      hi += g.q_max;
    }
    const auto fixed = cap_allocate(nominal, gates);
    for (std::size_t o = 0; o < gates.size(); ++o) CHECK(fixed.q[o] == gates[o].q_nom);
    const double qG = 1.2 * hi * u(rng);
    const auto a = cap_allocate(qG, gates);
    for (std::size_t o = 0; o < gates.size(); ++o) {
      CHECK(a.q[o] >= gates[o].q_min);
      CHECK(a.q[o] <= gates[o].q_max);
    }
    CHECK(a.wasted >= 0.0);
    CHECK(a.deficit >= 0.0);
    CHECK(sum(a.q) + a.wasted - a.deficit == doctest::Approx(qG).epsilon(1e-12));
    if (a.clipped == 0) CHECK(sum(a.q) == doctest::Approx(qG).epsilon(1e-12));
  }
}

TEST_CASE("optimisation-based allocation closed form") {
  const std::vector<Gate> two{flow_gate(1, 100.0, 10.0, 600.0, 5000.0), flow_gate(2, 100.0, 10.0, 400.0, 5000.0)};
  auto a = oap_allocate(1000.0, two);
  CHECK(a.q[0] == doctest::Approx(600.0));
  CHECK(a.q[1] == doctest::Approx(400.0));
  a = oap_allocate(1200.0, two);
  CHECK(a.q[0] == doctest::Approx(720.0).epsilon(1e-12));
  CHECK(a.q[1] == doctest::Approx(480.0).epsilon(1e-12));
  const auto pinv = oap_pseudoinverse(1200.0, std::vector<double>{600.0, 400.0});
  CHECK(pinv[0] == doctest::Approx(720.0).epsilon(1e-12));
  CHECK(pinv[1] == doctest::Approx(480.0).epsilon(1e-12));
}

TEST_CASE("optimisation-based allocation redistributes around an active bound") {
  const std::vector<Gate> gates{flow_gate(1, 100.0, 10.0, 600.0, 650.0), flow_gate(2, 100.0, 10.0, 400.0, 5000.0),
                                flow_gate(3, 100.0, 10.0, 200.0, 5000.0)};
  const auto a = oap_allocate(1500.0, gates);
  CHECK(a.q[0] == doctest::Approx(650.0));
  // Remaining 850 split between gates 2 and 3 in proportion 400:200.
  CHECK(a.q[1] == doctest::Approx(850.0 * 2.0 / 3.0).epsilon(1e-10));
  CHECK(a.q[2] == doctest::Approx(850.0 / 3.0).epsilon(1e-10));
}

TEST_CASE("optimisation-based allocation matches the water-filling oracle") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const auto gates = testing_support::random_gates(rng, 2 + static_cast<int>(rng() % 14));
    double lo = 0.0, hi = 0.0;
    for (const auto& g : gates) {
      lo += g.q_min;
      hi += g.q_max;
    }
    const double qG = lo + (hi - lo) * (0.02 + 0.96 * u(rng));
    const auto a = oap_allocate(qG, gates);
    const auto ref = water_fill(qG, gates);
    for (std::size_t o = 0; o < gates.size(); ++o) CHECK(std::abs(a.q[o] - ref[o]) <= 1e-8 * std::max(1.0, ref[o]));
    CHECK(sum(a.q) == doctest::Approx(qG).epsilon(1e-10));
  }
}

TEST_CASE("optimisation-based allocation out of range") {
  const std::vector<Gate> two{flow_gate(1, 100.0, 100.0, 600.0, 1500.0), flow_gate(2, 100.0, 100.0, 400.0, 1500.0)};
  auto a = oap_allocate(50.0, two);
  CHECK(a.q == std::vector<double>{100.0, 100.0});
  CHECK(a.deficit == doctest::Approx(150.0));
  a = oap_allocate(4000.0, two);
  CHECK(a.q == std::vector<double>{1500.0, 1500.0});
  CHECK(a.wasted == doctest::Approx(1000.0));
}

TEST_CASE("pseudoinverse route agrees with proportional scaling") {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(100.0, 3000.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> qhat(1 + rng() % 15);
    for (double& q : qhat) q = u(rng);
    const double qG = sum(qhat) * (0.3 + u(rng) / 2000.0);
    const auto q = oap_pseudoinverse(qG, qhat);
    for (std::size_t o = 0; o < qhat.size(); ++o)
      CHECK(std::abs(q[o] * sum(qhat) - qhat[o] * qG) <= 1e-8 * qhat[o] * qG);
  }
}

TEST_CASE("allocations scale with the nominal flows") {
  std::vector<Gate> g1{flow_gate(1, 100.0, 10.0, 600.0, 3000.0), flow_gate(2, 300.0, 10.0, 400.0, 3000.0)};
  std::vector<Gate> g2{flow_gate(1, 100.0, 20.0, 1200.0, 6000.0), flow_gate(2, 300.0, 20.0, 800.0, 6000.0)};
  for (double qG : {700.0, 1000.0, 1900.0}) {
    const auto c1 = cap_allocate(qG, g1), c2 = cap_allocate(2 * qG, g2);
    const auto o1 = oap_allocate(qG, g1), o2 = oap_allocate(2 * qG, g2);
    for (std::size_t o = 0; o < 2; ++o) {
      CHECK(c2.q[o] == doctest::Approx(2 * c1.q[o]));
      CHECK(o2.q[o] == doctest::Approx(2 * o1.q[o]));
    }
  }
}

TEST_CASE("no control commands the maximum flow") {
  const auto cfg = testing_support::san_francisco();
  const auto a = no_control(cfg.gates);
  for (std::size_t o = 0; o < cfg.gates.size(); ++o) CHECK(a.q[o] == cfg.gates[o].q_max);

  const Plant plant(cfg.plant, cfg.gates);
  const std::vector<double> zero(cfg.gates.size(), 0.0);
  StepRecord rec;
  (void)plant.step(NetworkState::initial(cfg.gates, 3000.0, 0.0), a.q, zero, 0.0, &rec);
  for (double q : rec.released) CHECK(q == 0.0);
  (void)plant.step(NetworkState::initial(cfg.gates, 3000.0, 1.0), a.q, zero, 0.0, &rec);
  for (std::size_t o = 0; o < cfg.gates.size(); ++o) CHECK(rec.released[o] == doctest::Approx(cfg.gates[o].q_max));
  (void)plant.step(NetworkState::initial(cfg.gates, 12000.0, 1.0), a.q, zero, 0.0, &rec);
  for (std::size_t o = 0; o < cfg.gates.size(); ++o) CHECK(rec.released[o] == doctest::Approx(cfg.gates[o].q_min));
}

TEST_CASE("policy names") {
  for (Policy p : {Policy::mgc, Policy::cap, Policy::oap, Policy::none}) CHECK(parse_policy(to_string(p)) == p);
  CHECK_THROWS_AS((void)parse_policy("fixed"), std::invalid_argument);
}
