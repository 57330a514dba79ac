#include "perimeter/nfd.hpp"

#include <cmath>
#include <sstream>
#include <utility>

namespace perimeter {

namespace {

void check_domain(const NfdParams& p, double n) {
  if (!(n >= 0.0 && n <= p.n_max)) {
    std::ostringstream msg;
    msg << "accumulation " << n << " outside fundamental diagram domain [0, " << p.n_max << "]";
    throw DomainError(msg.str());
  }
}

}  // namespace

void NfdParams::validate() const {
  if (!(n_max > 0.0)) throw std::invalid_argument("nfd.n_max must be positive");
  if (!(trip_length_km > 0.0)) throw std::invalid_argument("nfd.trip_length_km must be positive");
  if (!(link_length_km > 0.0)) throw std::invalid_argument("nfd.link_length_km must be positive");
  if (link_length_km > trip_length_km)
    throw std::invalid_argument("nfd.link_length_km must not exceed nfd.trip_length_km");
  if (!(exit_cap >= 0.0)) throw std::invalid_argument("nfd.exit_cap must be non-negative");
  if (!std::isfinite(a1) || !std::isfinite(a2) || !std::isfinite(a3))
    throw std::invalid_argument("nfd coefficients must be finite");
}

double circulating_flow(const NfdParams& p, double n) {
  check_domain(p, n);
  // Horner form; no constant term so O_c(0) == 0 exactly.
  return ((p.a3 * n + p.a2) * n + p.a1) * n;
}

double output(const NfdParams& p, double n) { return p.output_scale() * circulating_flow(p, n); }

double capped_outflow(const NfdParams& p, double n) {
  const double o = output(p, n);
  return o < p.exit_cap ? o : p.exit_cap;
}

double slope(const NfdParams& p, double n) {
  check_domain(p, n);
  if (p.exit_capped() && output(p, n) >= p.exit_cap) return 0.0;
  return p.output_scale() * ((3.0 * p.a3 * n + 2.0 * p.a2) * n + p.a1);
}

double critical_accumulation(const NfdParams& p) {
  // Stationary points of O_c: 3 a3 n^2 + 2 a2 n + a1 = 0.
  const double qa = 3.0 * p.a3;
  const double qb = 2.0 * p.a2;
  const double qc = p.a1;

  auto interior_max = [&](double n) {
    const double curvature = 6.0 * p.a3 * n + 2.0 * p.a2;
    return n > 0.0 && n < p.n_max && curvature < 0.0;
  };

  if (qa == 0.0) {
    if (qb == 0.0) throw DomainError("fundamental diagram is linear: no interior maximum");
    const double n = -qc / qb;
    if (!interior_max(n)) throw DomainError("fundamental diagram has no interior maximum");
    return n;
  }

  const double disc = qb * qb - 4.0 * qa * qc;
  if (disc < 0.0) throw DomainError("fundamental diagram is monotone: no interior maximum");
  // Numerically stable pair of roots.
  const double sq = std::sqrt(disc);
  const double t = -0.5 * (qb + std::copysign(sq, qb));
  double r1 = t / qa;
  double r2 = t != 0.0 ? qc / t : r1;
  if (r1 > r2) std::swap(r1, r2);
  for (double n : {r1, r2}) {
    if (interior_max(n)) return n;
  }
  throw DomainError("fundamental diagram has no maximum inside (0, n_max)");
}

}  // namespace perimeter
