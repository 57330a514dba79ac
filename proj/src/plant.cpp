#include "perimeter/plant.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>

namespace perimeter {

namespace {

[[noreturn]] void gate_error(int id, const std::string& what) {
  std::ostringstream msg;
  msg << "gate " << id << ": " << what;
  throw std::invalid_argument(msg.str());
}

bool close_rel(double a, double b, double rel) {
  return std::abs(a - b) <= rel * std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace

Gate Gate::from_signal_plan(int id, double storage, double saturation_flow, double cycle_s,
                            double g_min_s, double g_nom_s, double g_max_s, int delay_steps) {
  Gate g;
  g.id = id;
  g.storage = storage;
  g.saturation_flow = saturation_flow;
  g.cycle_s = cycle_s;
  g.g_min_s = g_min_s;
  g.g_nom_s = g_nom_s;
  g.g_max_s = g_max_s;
  g.q_min = g.flow_for_green(g_min_s);
  g.q_nom = g.flow_for_green(g_nom_s);
  g.q_max = g.flow_for_green(g_max_s);
  g.delay_steps = delay_steps;
  return g;
}

void Gate::validate() const {
  if (!(storage > 0.0)) gate_error(id, "storage must be positive");
  if (!(saturation_flow > 0.0)) gate_error(id, "saturation_flow must be positive");
  if (!(cycle_s > 0.0)) gate_error(id, "cycle_s must be positive");
  if (!(g_min_s > 0.0 && g_min_s <= g_nom_s && g_nom_s <= g_max_s && g_max_s <= cycle_s))
    gate_error(id, "greens must satisfy 0 < g_min <= g_nom <= g_max <= cycle");
  if (!(q_min > 0.0)) gate_error(id, "q_min must be positive");
  if (!close_rel(q_min, flow_for_green(g_min_s), 1e-9))
    gate_error(id, "q_min inconsistent with g_min * S / C");
  if (!close_rel(q_nom, flow_for_green(g_nom_s), 1e-9))
    gate_error(id, "q_nom inconsistent with g_nom * S / C");
  if (!close_rel(q_max, flow_for_green(g_max_s), 1e-9))
    gate_error(id, "q_max inconsistent with g_max * S / C");
  if (delay_steps < 0) gate_error(id, "delay_steps must be non-negative");
}

NetworkState NetworkState::initial(std::span<const Gate> gates, double n, double queue_fraction,
                                   std::span<const double> transit_flow) {
  NetworkState s;
  s.n = n;
  s.queue.reserve(gates.size());
  s.virtual_queue.assign(gates.size(), 0.0);
  s.in_transit.resize(gates.size());
  for (std::size_t o = 0; o < gates.size(); ++o) {
    s.queue.push_back(queue_fraction * gates[o].storage);
    const double fill = transit_flow.empty() ? 0.0 : transit_flow[o];
    s.in_transit[o].assign(static_cast<std::size_t>(gates[o].delay_steps), fill);
  }
  return s;
}

double NetworkState::total_vehicles(double period_h) const {
  double total = n;
  for (double l : queue) total += l;
  for (double v : virtual_queue) total += v;
  for (const auto& buf : in_transit)
    for (double f : buf) total += f * period_h;
  return total;
}

double make_disturbance(std::uint64_t seed, std::int64_t k, double n_k, const DisturbanceSpec& spec) {
  if (!spec.enabled || spec.half_range == 0.0 || !(n_k > spec.threshold)) return 0.0;
  const auto uk = static_cast<std::uint64_t>(k);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(uk), static_cast<std::uint32_t>(uk >> 32)};
  std::mt19937_64 gen(seq);
  std::uniform_real_distribution<double> draw(-spec.half_range, spec.half_range);
  return draw(gen);
}

std::vector<double> make_trapezoid(const Gate& gate, const TrapezoidShape& shape, int horizon) {
  if (shape.ramp_up < 0 || shape.plateau < 0 || shape.ramp_down < 0 || horizon < 0)
    throw std::invalid_argument("trapezoid: step counts must be non-negative");
  if (shape.ramp_up + shape.plateau + shape.ramp_down > horizon)
    throw std::invalid_argument("trapezoid: ramp_up + plateau + ramp_down exceeds horizon");
  if (!(shape.level >= 0.0 && shape.level <= 1.0))
    throw std::invalid_argument("trapezoid: level must lie in [0, 1]");

  const double peak = shape.level * gate.saturation_flow;
  std::vector<double> series(static_cast<std::size_t>(horizon), 0.0);
  std::size_t k = 0;
  for (int i = 0; i < shape.ramp_up; ++i)
    series[k++] = peak * (i + 1) / (shape.ramp_up + 1);
  for (int i = 0; i < shape.plateau; ++i) series[k++] = peak;
  for (int i = 0; i < shape.ramp_down; ++i)
    series[k++] = peak * (shape.ramp_down - i) / (shape.ramp_down + 1);
  return series;
}

void PlantParams::validate() const {
  nfd.validate();
  if (!(period_h > 0.0)) throw std::invalid_argument("plant.period must be positive");
  if (substeps < 1) throw std::invalid_argument("plant.substeps must be >= 1");
  if (!(overflow_fraction > 0.0 && overflow_fraction < 1.0))
    throw std::invalid_argument("plant.overflow_fraction must lie in (0, 1)");
}

double gate_outflow(double n, double queue, double command, double arrivals, const Gate& gate,
                    double overflow_fraction, double n_max, double substep_h) {
  const double available = arrivals + queue / substep_h;
  if (n >= overflow_fraction * n_max) return std::clamp(gate.q_min, 0.0, std::max(available, 0.0));
  const double q = std::min({available, command, gate.q_max});
  return std::max(q, 0.0);
}

Plant::Plant(PlantParams params, std::vector<Gate> gates)
    : params_(std::move(params)), gates_(std::move(gates)) {
  params_.validate();
  for (const auto& g : gates_) g.validate();
}

NetworkState Plant::step(const NetworkState& state, std::span<const double> commands,
                         std::span<const double> arrivals, double d_n, StepRecord* record) const {
  const std::size_t ng = gates_.size();
  if (commands.size() != ng || arrivals.size() != ng || state.queue.size() != ng)
    throw std::invalid_argument("plant step: vector sizes do not match gate count");

  const double T = params_.period_h;
  const double Tl = params_.substep_h();
  const double n_max = params_.nfd.n_max;

  NetworkState next = state;
  std::vector<double> released(ng, 0.0);

  // Queues move on the fast clock; the network state is frozen over the period.
  for (int s = 0; s < params_.substeps; ++s) {
    for (std::size_t o = 0; o < ng; ++o) {
      const Gate& g = gates_[o];
      double& l = next.queue[o];
      double& v = next.virtual_queue[o];
      const double q = gate_outflow(state.n, l, commands[o], arrivals[o], g,
                                    params_.overflow_fraction, n_max, Tl);
      l = std::max(l + Tl * (arrivals[o] - q), 0.0);
      if (l > g.storage) {
        v += l - g.storage;
        l = g.storage;
      } else if (v > 0.0) {
        const double moved = std::min(v, g.storage - l);
        l += moved;
        v -= moved;
      }
      released[o] += q;
    }
  }
  for (double& q : released) q /= params_.substeps;

  std::vector<double> arrived(ng);
  for (std::size_t o = 0; o < ng; ++o) {
    auto& buf = next.in_transit[o];
    if (buf.empty()) {
      arrived[o] = released[o];
    } else {
      arrived[o] = buf.front();
      buf.pop_front();
      buf.push_back(released[o]);
    }
  }

  const double exit = capped_outflow(params_.nfd, state.n);
  double inflow = d_n;
  for (double a : arrived) inflow += a;
  const double raw = state.n + T * (inflow - exit);
  next.n = std::clamp(raw, 0.0, n_max);

  if (record) {
    record->released = std::move(released);
    record->arrived = std::move(arrived);
    record->exit_flow = exit;
    record->disturbance = d_n;
    double arrivals_total = 0.0;
    for (double a : arrivals) arrivals_total += a;
    record->inflow_vehicles = T * (arrivals_total + d_n);
    record->clamped_vehicles = next.n - raw;
    record->gridlock = raw > n_max;
    record->emptied = raw < 0.0;
  }
  return next;
}

}  // namespace perimeter
