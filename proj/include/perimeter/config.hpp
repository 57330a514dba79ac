#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "perimeter/controller.hpp"
#include "perimeter/nfd.hpp"
#include "perimeter/plant.hpp"

namespace perimeter {

/// Bad or inconsistent configuration. The message names the offending field.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// What reaches each gate besides the scenario's external demand.
enum class Background {
  nominal,  ///< q-hat_o, so a network at its set point with empty queues stays put
  none,
};

struct DemandLevel {
  std::string name;
  double level = 0.0;  ///< trapezoid plateau as a fraction of S
};

struct DemandSpec {
  int ramp_up = 5;
  int plateau = 15;
  int ramp_down = 5;
  std::vector<DemandLevel> levels{{"none", 0.0}, {"medium", 0.25}, {"high", 0.40}};

  [[nodiscard]] const DemandLevel& find(const std::string& name) const;
};

struct ScenarioGrid {
  std::vector<double> initial_accumulations{3000.0, 7000.0, 10000.0, 12000.0};
  std::vector<std::string> demands{"none", "medium", "high"};
  double queue_init_fraction = 0.7;
  int horizon = 40;  ///< simulated controller periods
  std::uint64_t seed = 1;
};

struct SweepSpec {
  std::vector<int> horizons{1, 2, 3, 5, 8, 9, 10, 12, 15, 20, 25};
  int spread_from = 10;             ///< horizons at or above this enter the spread check
  double spread_threshold = 0.10;   ///< max relative TTS deviation within a scenario
};

struct ExperimentConfig {
  std::string name = "unnamed";
  PlantParams plant;
  std::vector<Gate> gates;
  MgcConfig controller;
  DisturbanceSpec disturbance;
  DemandSpec demand;
  Background background = Background::nominal;
  ScenarioGrid grid;
  SweepSpec sweep;

  [[nodiscard]] const NfdParams& nfd() const { return plant.nfd; }
  /// Throws ConfigError on any invariant violation.
  void validate() const;
};

/// Parses JSON text. `source` is used in error messages.
[[nodiscard]] ExperimentConfig parse_config(const std::string& text, const std::string& source = "<string>");
[[nodiscard]] ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace perimeter
