#include "perimeter/linear_model.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace perimeter {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double set_point_slope(const NfdParams& nfd, double n_hat, std::optional<double> slope_override) {
  if (!(n_hat > 0.0 && n_hat < nfd.n_max))
    throw DomainError("set point accumulation must lie strictly inside (0, n_max)");
  if (nfd.exit_capped() && output(nfd, n_hat) >= nfd.exit_cap)
    throw DomainError("set point lies on the exit-flow cap; linearisation undefined");
  return slope_override ? *slope_override : slope(nfd, n_hat);
}

}  // namespace

SetPoint SetPoint::resolved(std::span<const Gate> gates) const {
  SetPoint sp = *this;
  const std::size_t ng = gates.size();
  if (sp.queue.empty()) sp.queue.assign(ng, 0.0);
  if (sp.flow.empty()) {
    sp.flow.reserve(ng);
    for (const auto& g : gates) sp.flow.push_back(g.q_nom);
  }
  if (sp.disturbance.empty()) sp.disturbance.assign(ng + 1, 0.0);
  if (sp.queue.size() != ng || sp.flow.size() != ng || sp.disturbance.size() != ng + 1)
    throw std::invalid_argument("set point vector lengths do not match gate count");
  for (std::size_t o = 0; o < ng; ++o) {
    if (!(sp.queue[o] >= 0.0 && sp.queue[o] <= gates[o].storage))
      throw std::invalid_argument("set point queue outside [0, storage]");
    if (!(sp.flow[o] >= gates[o].q_min && sp.flow[o] <= gates[o].q_max))
      throw std::invalid_argument("set point flow outside [q_min, q_max]");
  }
  return sp;
}

LinearModel linearize(const NfdParams& nfd, std::span<const Gate> gates, const SetPoint& set_point,
                      double period_h, std::optional<double> slope_override) {
  if (!(period_h > 0.0)) throw std::invalid_argument("sample period must be positive");
  const SetPoint sp = set_point.resolved(gates);
  const double s = set_point_slope(nfd, sp.n, slope_override);
  const int ng = static_cast<int>(gates.size());
  const int nx = ng + 1;

  LinearModel m;
  m.period_h = period_h;
  m.physical_states = nx;
  m.A = MatrixXd::Identity(nx, nx);
  m.A(0, 0) = 1.0 - s * period_h;
  m.B = MatrixXd::Zero(nx, ng);
  m.B.row(0).setConstant(period_h);
  m.B.bottomRows(ng) = -period_h * MatrixXd::Identity(ng, ng);
  m.C = period_h * MatrixXd::Identity(nx, nx);

  m.x_hat.resize(nx);
  m.x_hat(0) = sp.n;
  m.u_hat.resize(ng);
  m.d_hat.resize(nx);
  m.d_hat(0) = sp.disturbance[0];
  auto& b = m.bounds;
  b.x_min = VectorXd::Zero(nx);
  b.x_max.resize(nx);
  b.x_max(0) = nfd.n_max;
  b.u_min.resize(ng);
  b.u_max.resize(ng);
  b.constrained.assign(static_cast<std::size_t>(nx), true);
  for (int o = 0; o < ng; ++o) {
    const auto uo = static_cast<std::size_t>(o);
    m.x_hat(o + 1) = sp.queue[uo];
    m.u_hat(o) = sp.flow[uo];
    m.d_hat(o + 1) = sp.disturbance[uo + 1];
    b.x_max(o + 1) = gates[uo].storage;
    b.u_min(o) = gates[uo].q_min;
    b.u_max(o) = gates[uo].q_max;
  }
  return m;
}

LinearModel linearize_aggregate(const NfdParams& nfd, std::span<const Gate> gates,
                                const SetPoint& set_point, double period_h,
                                std::optional<double> slope_override) {
  if (!(period_h > 0.0)) throw std::invalid_argument("sample period must be positive");
  const SetPoint sp = set_point.resolved(gates);
  const double s = set_point_slope(nfd, sp.n, slope_override);

  LinearModel m;
  m.period_h = period_h;
  m.physical_states = 1;
  m.A = MatrixXd::Constant(1, 1, 1.0 - s * period_h);
  m.B = MatrixXd::Constant(1, 1, period_h);
  m.C = MatrixXd::Constant(1, 1, period_h);
  m.x_hat = VectorXd::Constant(1, sp.n);
  m.u_hat = VectorXd::Constant(1, std::accumulate(sp.flow.begin(), sp.flow.end(), 0.0));
  m.d_hat = VectorXd::Constant(1, sp.disturbance[0]);
  double qmin = 0.0, qmax = 0.0;
  for (const auto& g : gates) {
    qmin += g.q_min;
    qmax += g.q_max;
  }
  m.bounds.x_min = VectorXd::Zero(1);
  m.bounds.x_max = VectorXd::Constant(1, nfd.n_max);
  m.bounds.u_min = VectorXd::Constant(1, qmin);
  m.bounds.u_max = VectorXd::Constant(1, qmax);
  m.bounds.constrained = {true};
  return m;
}

LinearModel augment_delays(const LinearModel& model, std::span<const int> kappa) {
  const int nu = model.nu();
  if (static_cast<int>(kappa.size()) != nu)
    throw std::invalid_argument("augment_delays: one delay per input required");
  if (!model.delay_steps.empty() && model.nx() != model.physical_states)
    throw std::invalid_argument("augment_delays: model is already augmented");
  int extra = 0;
  for (int k : kappa) {
    if (k < 0) throw std::invalid_argument("augment_delays: delays must be non-negative");
    extra += k;
  }
  LinearModel out = model;
  out.delay_steps.assign(kappa.begin(), kappa.end());
  if (extra == 0) return out;

  const int nx0 = model.nx();
  const int nx = nx0 + extra;
  out.A = MatrixXd::Zero(nx, nx);
  out.A.topLeftCorner(nx0, nx0) = model.A;
  out.B = MatrixXd::Zero(nx, nu);
  out.B.topRows(nx0) = model.B;
  out.C = MatrixXd::Zero(nx, model.nd());
  out.C.topRows(nx0) = model.C;
  out.x_hat.conservativeResize(nx);

  auto& b = out.bounds;
  b.x_min.conservativeResize(nx);
  b.x_max.conservativeResize(nx);
  b.constrained.resize(static_cast<std::size_t>(nx), false);

  int row = nx0;
  for (int o = 0; o < nu; ++o) {
    const int k = kappa[static_cast<std::size_t>(o)];
    if (k == 0) continue;
    // z_1 <- u_o, z_j <- z_{j-1}; the accumulation row reads z_k instead of u_o.
    out.B(row, o) = 1.0;
    for (int j = 1; j < k; ++j) out.A(row + j, row + j - 1) = 1.0;
    out.A(0, row + k - 1) = model.B(0, o);
    out.B(0, o) = 0.0;
    for (int j = 0; j < k; ++j) {
      out.x_hat(row + j) = model.u_hat(o);
      b.x_min(row + j) = model.bounds.u_min.size() ? model.bounds.u_min(o) : -kInf;
      b.x_max(row + j) = model.bounds.u_max.size() ? model.bounds.u_max(o) : kInf;
    }
    row += k;
  }
  return out;
}

CostWeights equity_weights(const LinearModel& model, std::span<const Gate> gates, double w, double r) {
  if (!(w > 0.0)) throw std::invalid_argument("weight w must be positive");
  if (!(r > 0.0)) throw std::invalid_argument("control weight r must be positive");
  CostWeights cw;
  cw.state = VectorXd::Zero(model.nx());
  cw.state(0) = 1.0 / w;
  const int queues = std::min<int>(model.physical_states - 1, static_cast<int>(gates.size()));
  for (int o = 0; o < queues; ++o) cw.state(o + 1) = 1.0 / gates[static_cast<std::size_t>(o)].storage;
  cw.input = VectorXd::Constant(model.nu(), r);
  return cw;
}

VectorXd CondensedQp::predict(const VectorXd& dx0, const VectorXd& dU, const VectorXd& dD) const {
  return Phi * dx0 + Gamma * dU + Z * dD;
}

VectorXd CondensedQp::gradient(const VectorXd& dx0, const VectorXd& dD) const {
  return F * dx0 + G * dD;
}

VectorXd CondensedQp::rhs(const VectorXd& dx0, const VectorXd& dD) const {
  return W0 + Wx * dx0 + Wd * dD;
}

QpProblem CondensedQp::problem(const VectorXd& dx0, const VectorXd& dD, bool state_rows) const {
  QpProblem p;
  p.H = H;
  p.f = gradient(dx0, dD);
  if (state_rows) {
    p.L = L;
    p.W = rhs(dx0, dD);
  } else {
    p.L = L.topRows(input_rows);
    p.W = W0.head(input_rows);
  }
  return p;
}

CondensedQp condense(const LinearModel& model, const CostWeights& weights, int prediction_horizon,
                     int control_horizon, const Bounds& bounds) {
  if (prediction_horizon != control_horizon)
    throw std::invalid_argument("condense: prediction and optimisation horizons must be equal");
  if (control_horizon < 1) throw std::invalid_argument("condense: horizon must be >= 1");
  const int nx = model.nx(), nu = model.nu(), nd = model.nd();
  if (model.A.cols() != nx || model.B.rows() != nx || model.C.rows() != nx)
    throw std::invalid_argument("condense: model matrix dimensions disagree");
  if (weights.state.size() != nx || weights.input.size() != nu)
    throw std::invalid_argument("condense: weight dimensions disagree with model");
  if ((weights.state.array() < 0.0).any()) throw std::invalid_argument("condense: Q must be PSD");
  if (!(weights.input.array() > 0.0).all()) throw std::invalid_argument("condense: R must be positive definite");
  if (bounds.u_min.size() != nu || bounds.u_max.size() != nu || bounds.x_min.size() != nx ||
      bounds.x_max.size() != nx || static_cast<int>(bounds.constrained.size()) != nx)
    throw std::invalid_argument("condense: bound dimensions disagree with model");

  const int N = control_horizon;
  CondensedQp qp;
  qp.horizon = N;
  qp.nx = nx;
  qp.nu = nu;
  qp.nd = nd;

  // A^k B and A^k C for k = 0..N-1; A^k for k = 1..N.
  std::vector<MatrixXd> AkB(static_cast<std::size_t>(N)), AkC(static_cast<std::size_t>(N));
  AkB[0] = model.B;
  AkC[0] = model.C;
  for (int k = 1; k < N; ++k) {
    AkB[static_cast<std::size_t>(k)] = model.A * AkB[static_cast<std::size_t>(k - 1)];
    AkC[static_cast<std::size_t>(k)] = model.A * AkC[static_cast<std::size_t>(k - 1)];
  }
  qp.Phi.resize(N * nx, nx);
  MatrixXd Ak = model.A;
  for (int k = 0; k < N; ++k) {
    qp.Phi.middleRows(k * nx, nx) = Ak;
    Ak = model.A * Ak;
  }
  qp.Gamma = MatrixXd::Zero(N * nx, N * nu);
  qp.Z = MatrixXd::Zero(N * nx, N * nd);
  for (int i = 0; i < N; ++i) {
    for (int j = 0; j <= i; ++j) {
      qp.Gamma.block(i * nx, j * nu, nx, nu) = AkB[static_cast<std::size_t>(i - j)];
      qp.Z.block(i * nx, j * nd, nx, nd) = AkC[static_cast<std::size_t>(i - j)];
    }
  }

  const VectorXd qbar = weights.state.replicate(N, 1);
  const VectorXd rbar = weights.input.replicate(N, 1);
  const MatrixXd QGamma = qbar.asDiagonal() * qp.Gamma;
  qp.H = qp.Gamma.transpose() * QGamma;
  qp.H.diagonal() += rbar;
  qp.H = 0.5 * (qp.H + qp.H.transpose()).eval();
  qp.F = QGamma.transpose() * qp.Phi;
  qp.G = QGamma.transpose() * qp.Z;

  // Inequalities: input upper, input lower, then state upper/lower for the
  // constrained states at k = 1..N.
  std::vector<int> srows;
  for (int k = 0; k < N; ++k)
    for (int i = 0; i < nx; ++i)
      if (bounds.constrained[static_cast<std::size_t>(i)]) srows.push_back(k * nx + i);
  const int nU = N * nu;
  const int ns = static_cast<int>(srows.size());
  const int m = 2 * nU + 2 * ns;
  qp.input_rows = 2 * nU;
  qp.L = MatrixXd::Zero(m, nU);
  qp.W0 = VectorXd::Zero(m);
  qp.Wx = MatrixXd::Zero(m, nx);
  qp.Wd = MatrixXd::Zero(m, N * nd);

  qp.L.topRows(nU) = MatrixXd::Identity(nU, nU);
  qp.L.middleRows(nU, nU) = -MatrixXd::Identity(nU, nU);
  for (int k = 0; k < N; ++k) {
    for (int j = 0; j < nu; ++j) {
      qp.W0(k * nu + j) = bounds.u_max(j) - model.u_hat(j);
      qp.W0(nU + k * nu + j) = -(bounds.u_min(j) - model.u_hat(j));
    }
  }
  for (int r = 0; r < ns; ++r) {
    const int row = srows[static_cast<std::size_t>(r)];
    const int i = row % nx;
    const int up = 2 * nU + r;
    const int lo = 2 * nU + ns + r;
    qp.L.row(up) = qp.Gamma.row(row);
    qp.L.row(lo) = -qp.Gamma.row(row);
    qp.W0(up) = bounds.x_max(i) - model.x_hat(i);
    qp.W0(lo) = -(bounds.x_min(i) - model.x_hat(i));
    qp.Wx.row(up) = -qp.Phi.row(row);
    qp.Wx.row(lo) = qp.Phi.row(row);
    qp.Wd.row(up) = -qp.Z.row(row);
    qp.Wd.row(lo) = qp.Z.row(row);
  }
  return qp;
}

}  // namespace perimeter
