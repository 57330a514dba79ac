#include "perimeter/metrics.hpp"

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <stdexcept>

namespace perimeter {

namespace {

void require_rows(const Trajectory& t) {
  if (t.rows.empty()) throw std::invalid_argument("metric of an empty trajectory");
}

double row_sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

}  // namespace

double tts(const Trajectory& t, std::size_t first, std::size_t last) {
  require_rows(t);
  last = std::min(last, t.rows.size() - 1);
  double s = 0.0;
  for (std::size_t k = first; k <= last; ++k) {
    const auto& r = t.rows[k];
    s += r.n + row_sum(r.queue) + row_sum(r.virtual_queue);
  }
  return t.period_h * s;
}

double tts_network(const Trajectory& t) {
  require_rows(t);
  double s = 0.0;
  for (const auto& r : t.rows) s += r.n;
  return t.period_h * s;
}

std::vector<double> tts_gates(const Trajectory& t) {
  require_rows(t);
  std::vector<double> out(t.rows.front().queue.size(), 0.0);
  for (const auto& r : t.rows)
    for (std::size_t o = 0; o < out.size(); ++o)
      out[o] += r.queue[o] + (o < r.virtual_queue.size() ? r.virtual_queue[o] : 0.0);
  for (double& v : out) v *= t.period_h;
  return out;
}

double tts_gates_average(const Trajectory& t) {
  const auto g = tts_gates(t);
  return g.empty() ? 0.0 : row_sum(g) / static_cast<double>(g.size());
}

double rqb(const Trajectory& t, std::span<const Gate> gates, double n_max) {
  require_rows(t);
  double s = 0.0;
  for (const auto& r : t.rows) {
    if (r.queue.size() != gates.size()) throw std::invalid_argument("rqb: gate count mismatch");
    for (std::size_t o = 0; o < gates.size(); ++o) s += r.queue[o] * r.queue[o] / gates[o].storage;
    s += r.n * r.n / n_max;
  }
  return s;
}

double queue_spread(const TrajectoryRow& row, std::span<const Gate> gates) {
  if (gates.empty()) return 0.0;
  double lo = 1e300, hi = -1e300;
  for (std::size_t o = 0; o < gates.size(); ++o) {
    const double f = row.queue[o] / gates[o].storage;
    lo = std::min(lo, f);
    hi = std::max(hi, f);
  }
  return hi - lo;
}

}  // namespace perimeter
