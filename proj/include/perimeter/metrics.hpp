#pragma once

#include <span>
#include <vector>

#include "perimeter/plant.hpp"
#include "perimeter/trajectory.hpp"

namespace perimeter {

// Sums run over trajectory rows first..last inclusive (default: all rows,
// k = 0..K). Splitting a run at row m gives TTS(0..m) + TTS(m+1..K).

/// T * sum_k (n + sum l + sum v), veh*h.
[[nodiscard]] double tts(const Trajectory& t, std::size_t first = 0, std::size_t last = SIZE_MAX);

/// T * sum_k n.
[[nodiscard]] double tts_network(const Trajectory& t);

/// Per gate T * sum_k (l_o + v_o).
[[nodiscard]] std::vector<double> tts_gates(const Trajectory& t);

/// Mean of tts_gates.
[[nodiscard]] double tts_gates_average(const Trajectory& t);

/// sum_k (sum_o l_o^2 / l_o,max + n^2 / n_max), veh.
[[nodiscard]] double rqb(const Trajectory& t, std::span<const Gate> gates, double n_max);

/// max_o l_o/l_o,max - min_o l_o/l_o,max for one row.
[[nodiscard]] double queue_spread(const TrajectoryRow& row, std::span<const Gate> gates);

}  // namespace perimeter
