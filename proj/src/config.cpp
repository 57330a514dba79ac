#include "perimeter/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace perimeter {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& what) {
  throw ConfigError(field + ": " + what);
}

template <class T>
T get(const json& j, const std::string& key, const std::string& path) {
  const std::string field = path.empty() ? key : path + "." + key;
  if (!j.contains(key)) fail(field, "missing");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(field, std::string("wrong type (") + e.what() + ")");
  }
}

template <class T>
T get_or(const json& j, const std::string& key, const std::string& path, T fallback) {
  if (!j.contains(key)) return fallback;
  return get<T>(j, key, path);
}

const json& section(const json& root, const std::string& key) {
  static const json empty = json::object();
  if (!root.contains(key)) return empty;
  if (!root.at(key).is_object()) fail(key, "must be an object");
  return root.at(key);
}

std::size_t line_of(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i)
    if (text[i] == '\n') ++line;
  return line;
}

Gate parse_gate(const json& j, std::size_t index, double total_storage) {
  const std::string path = "gates[" + std::to_string(index) + "]";
  if (!j.is_object()) fail(path, "must be an object");
  Gate g;
  g.id = get_or<int>(j, "id", path, static_cast<int>(index) + 1);
  if (j.contains("storage")) {
    g.storage = get<double>(j, "storage", path);
  } else if (j.contains("storage_ratio_percent")) {
    if (!(total_storage > 0.0)) fail("total_storage", "required and positive when storage_ratio_percent is used");
    g.storage = get<double>(j, "storage_ratio_percent", path) / 100.0 * total_storage;
  } else {
    fail(path + ".storage", "missing (give storage or storage_ratio_percent)");
  }
  g.saturation_flow = get<double>(j, "saturation_flow", path);
  g.cycle_s = get<double>(j, "cycle_s", path);
  g.g_min_s = get<double>(j, "g_min_s", path);
  g.g_nom_s = get<double>(j, "g_nom_s", path);
  g.g_max_s = get<double>(j, "g_max_s", path);
  g.q_min = get<double>(j, "q_min", path);
  g.q_nom = get<double>(j, "q_nom", path);
  g.q_max = get<double>(j, "q_max", path);
  g.delay_steps = get_or<int>(j, "delay_steps", path, 0);
  try {
    g.validate();
  } catch (const std::invalid_argument& e) {
    fail(path, e.what());
  }
  return g;
}

}  // namespace

const DemandLevel& DemandSpec::find(const std::string& name) const {
  for (const auto& l : levels)
    if (l.name == name) return l;
  fail("demand.levels", "no level named '" + name + "'");
}

void ExperimentConfig::validate() const {
  auto wrap = [](const std::string& field, auto&& fn) {
    try {
      fn();
    } catch (const std::invalid_argument& e) {
      fail(field, e.what());
    }
  };
  wrap("nfd", [&] { plant.nfd.validate(); });
  wrap("plant", [&] { plant.validate(); });
  wrap("controller", [&] { controller.validate(); });
  if (gates.empty()) fail("gates", "at least one gate required");
  std::set<int> ids;
  for (std::size_t i = 0; i < gates.size(); ++i) {
    wrap("gates[" + std::to_string(i) + "]", [&] { gates[i].validate(); });
    if (!ids.insert(gates[i].id).second) fail("gates[" + std::to_string(i) + "].id", "duplicate id");
  }
  if (!(disturbance.half_range >= 0.0)) fail("disturbance.half_range", "must be non-negative");
  if (demand.ramp_up < 0 || demand.plateau < 0 || demand.ramp_down < 0)
    fail("demand", "ramp and plateau lengths must be non-negative");
  for (const auto& l : demand.levels)
    if (!(l.level >= 0.0)) fail("demand.levels." + l.name, "must be non-negative");
  for (double n0 : grid.initial_accumulations)
    if (!(n0 >= 0.0 && n0 <= plant.nfd.n_max)) fail("scenarios.initial_accumulations", "must lie in [0, n_max]");
  for (const auto& d : grid.demands) (void)demand.find(d);
  if (!(grid.queue_init_fraction >= 0.0 && grid.queue_init_fraction <= 1.0))
    fail("scenarios.queue_init_fraction", "must lie in [0, 1]");
  if (grid.horizon < 1) fail("scenarios.horizon", "must be at least 1");
  if (sweep.horizons.empty()) fail("sweep.horizons", "must not be empty");
  for (int h : sweep.horizons)
    if (h < 1) fail("sweep.horizons", "entries must be at least 1");
  if (!(sweep.spread_threshold > 0.0)) fail("sweep.spread_threshold", "must be positive");
}

ExperimentConfig parse_config(const std::string& text, const std::string& source) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    std::ostringstream msg;
    msg << source << ": parse error at line " << line_of(text, e.byte) << ": " << e.what();
    throw ConfigError(msg.str());
  }
  if (!root.is_object()) throw ConfigError(source + ": top level must be an object");

  ExperimentConfig c;
  c.name = get_or<std::string>(root, "name", "", c.name);

  const json& nfd = section(root, "nfd");
  auto& p = c.plant.nfd;
  p.a3 = get_or(nfd, "a3", "nfd", p.a3);
  p.a2 = get_or(nfd, "a2", "nfd", p.a2);
  p.a1 = get_or(nfd, "a1", "nfd", p.a1);
  p.n_max = get_or(nfd, "n_max", "nfd", p.n_max);
  p.trip_length_km = get_or(nfd, "trip_length_km", "nfd", p.trip_length_km);
  p.link_length_km = get_or(nfd, "link_length_km", "nfd", p.link_length_km);
  if (nfd.contains("exit_cap") && !nfd.at("exit_cap").is_null()) p.exit_cap = get<double>(nfd, "exit_cap", "nfd");

  const json& plant = section(root, "plant");
  c.plant.period_h = get_or(plant, "period_h", "plant", c.plant.period_h);
  c.plant.substeps = get_or(plant, "substeps", "plant", c.plant.substeps);
  c.plant.overflow_fraction = get_or(plant, "overflow_fraction", "plant", c.plant.overflow_fraction);
  const std::string bg = get_or<std::string>(plant, "background", "plant", "nominal");
  if (bg == "nominal") c.background = Background::nominal;
  else if (bg == "none") c.background = Background::none;
  else fail("plant.background", "expected 'nominal' or 'none'");

  const json& ctl = section(root, "controller");
  auto& m = c.controller;
  m.horizon = get_or(ctl, "horizon", "controller", m.horizon);
  m.w = get_or(ctl, "w", "controller", m.w);
  m.r = get_or(ctl, "r", "controller", m.r);
  m.set_point.n = get_or(ctl, "set_point", "controller", m.set_point.n);
  if (ctl.contains("slope_override") && !ctl.at("slope_override").is_null())
    m.slope_override = get<double>(ctl, "slope_override", "controller");
  m.state_constraints = get_or(ctl, "state_constraints", "controller", m.state_constraints);
  m.qp.tol = get_or(ctl, "qp_tol", "controller", m.qp.tol);
  m.qp.max_iterations = get_or(ctl, "qp_max_iterations", "controller", m.qp.max_iterations);
  const std::string fb = get_or<std::string>(ctl, "fallback", "controller", "drop_state_rows");
  if (fb == "drop_state_rows") m.fallback = FallbackPolicy::drop_state_rows;
  else if (fb == "fail") m.fallback = FallbackPolicy::fail;
  else fail("controller.fallback", "expected 'drop_state_rows' or 'fail'");

  const json& dist = section(root, "disturbance");
  c.disturbance.enabled = get_or(dist, "enabled", "disturbance", c.disturbance.enabled);
  c.disturbance.threshold = get_or(dist, "threshold", "disturbance", c.disturbance.threshold);
  c.disturbance.half_range = get_or(dist, "half_range", "disturbance", c.disturbance.half_range);

  const json& dem = section(root, "demand");
  c.demand.ramp_up = get_or(dem, "ramp_up", "demand", c.demand.ramp_up);
  c.demand.plateau = get_or(dem, "plateau", "demand", c.demand.plateau);
  c.demand.ramp_down = get_or(dem, "ramp_down", "demand", c.demand.ramp_down);
  if (dem.contains("levels")) {
    const json& lv = dem.at("levels");
    if (!lv.is_object()) fail("demand.levels", "must be an object of name: fraction");
    c.demand.levels.clear();
    for (auto it = lv.begin(); it != lv.end(); ++it) {
      if (!it.value().is_number()) fail("demand.levels." + it.key(), "must be a number");
      c.demand.levels.push_back({it.key(), it.value().get<double>()});
    }
  }

  const double total_storage = get_or(root, "total_storage", "", 0.0);
  if (!root.contains("gates") || !root.at("gates").is_array()) fail("gates", "missing or not an array");
  const json& gates = root.at("gates");
  for (std::size_t i = 0; i < gates.size(); ++i) c.gates.push_back(parse_gate(gates[i], i, total_storage));

  const json& sc = section(root, "scenarios");
  c.grid.initial_accumulations = get_or(sc, "initial_accumulations", "scenarios", c.grid.initial_accumulations);
  c.grid.demands = get_or(sc, "demands", "scenarios", c.grid.demands);
  c.grid.queue_init_fraction = get_or(sc, "queue_init_fraction", "scenarios", c.grid.queue_init_fraction);
  c.grid.horizon = get_or(sc, "horizon", "scenarios", c.grid.horizon);
  c.grid.seed = get_or(sc, "seed", "scenarios", c.grid.seed);

  const json& sw = section(root, "sweep");
  c.sweep.horizons = get_or(sw, "horizons", "sweep", c.sweep.horizons);
  c.sweep.spread_from = get_or(sw, "spread_from", "sweep", c.sweep.spread_from);
  c.sweep.spread_threshold = get_or(sw, "spread_threshold", "sweep", c.sweep.spread_threshold);

  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.string());
}

}  // namespace perimeter
