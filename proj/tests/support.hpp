#pragma once

#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "perimeter/config.hpp"
#include "perimeter/plant.hpp"

namespace testing_support {

inline perimeter::ExperimentConfig san_francisco() {
  return perimeter::load_config(PERIMETER_DATA_DIR "/san_francisco.json");
}

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

inline double max_abs(const Eigen::MatrixXd& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

/// Gate with round numbers; flows derived from greens.
inline perimeter::Gate simple_gate(int id, double storage, double S = 1800.0, double C = 90.0,
                                   double gmin = 10.0, double gnom = 45.0, double gmax = 80.0,
                                   int delay = 0) {
  return perimeter::Gate::from_signal_plan(id, storage, S, C, gmin, gnom, gmax, delay);
}

inline std::vector<perimeter::Gate> random_gates(std::mt19937_64& rng, int count, int max_delay = 0) {
  std::uniform_real_distribution<double> storage(50.0, 600.0);
  std::uniform_int_distribution<int> lanes(1, 4);
  std::uniform_int_distribution<int> delay(0, max_delay);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<perimeter::Gate> g;
  for (int o = 0; o < count; ++o) {
    const double C = u(rng) < 0.5 ? 60.0 : 90.0;
    const double gmin = 5.0 + 5.0 * u(rng);
    const double gmax = C - 5.0 - 5.0 * u(rng);
    const double gnom = gmin + (gmax - gmin) * (0.2 + 0.6 * u(rng));
    g.push_back(perimeter::Gate::from_signal_plan(o + 1, storage(rng), 1800.0 * lanes(rng), C, gmin, gnom,
                                                  gmax, delay(rng)));
  }
  return g;
}

}  // namespace testing_support
