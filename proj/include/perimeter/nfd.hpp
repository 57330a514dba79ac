#pragma once

#include <limits>
#include <stdexcept>
#include <string>

namespace perimeter {

/// Thrown when a model function is evaluated outside its validity domain.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Cubic network fundamental diagram O_c(n) = a3 n^3 + a2 n^2 + a1 n,
/// scaled to trip completions by link_length / trip_length.
///
/// Units are vehicles and hours throughout: a3 in veh/h per veh^3, a2 in
/// veh/h per veh^2, a1 in 1/h. The fit is only valid on [0, n_max].
struct NfdParams {
  double a3 = 4.128e-7;
  double a2 = -0.0136;
  double a1 = 113.264;
  double n_max = 13000.0;
  double trip_length_km = 1.75;
  double link_length_km = 0.25;
  /// Maximum exit flow (veh/h); infinity means uncapped.
  double exit_cap = std::numeric_limits<double>::infinity();

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;

  [[nodiscard]] double output_scale() const { return link_length_km / trip_length_km; }
  [[nodiscard]] bool exit_capped() const { return exit_cap < std::numeric_limits<double>::infinity(); }
};

/// Total circulating flow (veh/h).
[[nodiscard]] double circulating_flow(const NfdParams& p, double n);

/// Trip-completion flow (veh/h): (l/L) * circulating_flow.
[[nodiscard]] double output(const NfdParams& p, double n);

/// min(exit_cap, output(n)).
[[nodiscard]] double capped_outflow(const NfdParams& p, double n);

/// d output / dn (1/h). Zero where the exit cap is binding.
[[nodiscard]] double slope(const NfdParams& p, double n);

/// Accumulation at which the circulating flow peaks inside (0, n_max).
/// Throws DomainError when the polynomial has no interior maximum.
[[nodiscard]] double critical_accumulation(const NfdParams& p);

}  // namespace perimeter
