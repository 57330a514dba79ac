#include "perimeter/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace perimeter {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Goldfarb-Idnani in the form  min 1/2 y'Gy + a'y  s.t.  n_i'y = b_i (i < meq),
// n_i'y >= b_i (i >= meq). Columns of N are constraint normals.
//
// J and R hold the factorisation  L^-T Q = J,  Q' N_active = [R; 0]  of the
// active normals, updated with Givens rotations on add and drop.
class DualActiveSet {
 public:
  DualActiveSet(const MatrixXd& G, const VectorXd& a, const MatrixXd& N, const VectorXd& b, int meq,
                int max_iterations)
      : G_(G), a_(a), N_(N), b_(b), meq_(meq), max_iter_(max_iterations) {
    n_ = static_cast<int>(G.rows());
    m_ = static_cast<int>(N.cols());
  }

  struct Result {
    QpStatus status = QpStatus::optimal;
    VectorXd y;
    VectorXd u;  // multiplier per constraint (all m)
    int iterations = 0;
    int active_inequalities = 0;
    // Infeasibility: blocking constraint p and active multipliers r such that
    // n_p = sum_j r_j n_{active_j}.
    int blocking = -1;
    std::vector<int> active;
    VectorXd r;
  };

  Result run(double feas_tol) {
    Result res;
    Eigen::LLT<MatrixXd> llt(G_);
    if (llt.info() != Eigen::Success) throw SolverError("QP Hessian is not positive definite");
    const MatrixXd Lc = llt.matrixL();
    J_ = Lc.transpose().triangularView<Eigen::Upper>().solve(MatrixXd::Identity(n_, n_));
    R_ = MatrixXd::Zero(n_, n_);
    q_ = 0;
    active_.clear();
    u_.resize(0);

    y_ = -llt.solve(a_);
    iactive_.assign(static_cast<std::size_t>(m_), false);

    VectorXd d(n_), z(n_), r;

    for (int i = 0; i < meq_; ++i) {
      const VectorXd np = N_.col(i);
      d.noalias() = J_.transpose() * np;
      compute_z(d, z);
      compute_r(d, r);
      double t2 = 0.0;
      const double znp = z.dot(np);
      if (std::abs(znp) > 1e-14) t2 = (b_(i) - np.dot(y_)) / znp;
      y_ += t2 * z;
      if (q_ > 0) u_.head(q_) -= t2 * r;
      if (!add_constraint(d)) throw SolverError("equality constraints are linearly dependent");
      u_.conservativeResize(q_);
      u_(q_ - 1) = t2;
      active_.push_back(i);
    }

    int iter = 0;
    while (true) {
      if (++iter > max_iter_) {
        res.status = QpStatus::max_iterations;
        break;
      }
      // Most violated inactive inequality.
      int p = -1;
      double worst = 0.0;
      if (m_ > meq_) {
        const VectorXd s = N_.rightCols(m_ - meq_).transpose() * y_ - b_.tail(m_ - meq_);
        for (int i = meq_; i < m_; ++i) {
          if (iactive_[static_cast<std::size_t>(i)]) continue;
          const double si = s(i - meq_);
          if (si < -feas_tol * (1.0 + std::abs(b_(i))) && si < worst) {
            worst = si;
            p = i;
          }
        }
      }
      if (p < 0) break;

      const VectorXd np = N_.col(p);
      double up = 0.0;
      while (true) {
        d.noalias() = J_.transpose() * np;
        compute_z(d, z);
        compute_r(d, r);
        const double sp = np.dot(y_) - b_(p);

        double t1 = kInf;
        int drop = -1;
        for (int j = 0; j < q_; ++j) {
          if (active_[static_cast<std::size_t>(j)] < meq_) continue;
          if (r(j) > 1e-14) {
            const double t = u_(j) / r(j);
            if (t < t1) {
              t1 = t;
              drop = j;
            }
          }
        }
        const double znp = z.dot(np);
        const double t2 = (z.norm() > 1e-12 && znp > 1e-14) ? -sp / znp : kInf;

        if (t1 == kInf && t2 == kInf) {
          res.status = QpStatus::infeasible;
          res.blocking = p;
          res.active = active_;
          res.r = r;
          finish(res, iter);
          return res;
        }
        if (t2 == kInf) {
          u_.head(q_) -= t1 * r;
          up += t1;
          drop_constraint(drop);
          continue;
        }
        const double t = std::min(t1, t2);
        y_ += t * z;
        if (q_ > 0) u_.head(q_) -= t * r;
        up += t;
        if (t2 <= t1) {
          if (!add_constraint(d)) {
            // Numerically dependent normal: treat as satisfied.
            iactive_[static_cast<std::size_t>(p)] = true;
            break;
          }
          u_.conservativeResize(q_);
          u_(q_ - 1) = up;
          active_.push_back(p);
          iactive_[static_cast<std::size_t>(p)] = true;
          break;
        }
        drop_constraint(drop);
      }
    }
    finish(res, iter);
    return res;
  }

 private:
  void finish(Result& res, int iter) {
    res.y = y_;
    res.u = VectorXd::Zero(m_);
    int act = 0;
    for (int j = 0; j < q_; ++j) {
      res.u(active_[static_cast<std::size_t>(j)]) = u_(j);
      if (active_[static_cast<std::size_t>(j)] >= meq_) ++act;
    }
    res.iterations = iter;
    res.active_inequalities = act;
  }

  void compute_z(const VectorXd& d, VectorXd& z) const {
    z.setZero(n_);
    for (int j = q_; j < n_; ++j) z.noalias() += d(j) * J_.col(j);
  }

  void compute_r(const VectorXd& d, VectorXd& r) const {
    r.resize(q_);
    for (int i = q_ - 1; i >= 0; --i) {
      double sum = d(i);
      for (int j = i + 1; j < q_; ++j) sum -= R_(i, j) * r(j);
      r(i) = sum / R_(i, i);
    }
  }

  static void givens(double a, double b, double& c, double& s, double& h) {
    h = std::hypot(a, b);
    if (h == 0.0) {
      c = 1.0;
      s = 0.0;
      return;
    }
    c = a / h;
    s = b / h;
  }

  bool add_constraint(VectorXd& d) {
    if (q_ >= n_) return false;
    for (int j = n_ - 1; j >= q_ + 1; --j) {
      double c, s, h;
      givens(d(j - 1), d(j), c, s, h);
      if (s == 0.0) continue;
      d(j - 1) = h;
      d(j) = 0.0;
      for (int k = 0; k < n_; ++k) {
        const double t1 = J_(k, j - 1);
        const double t2 = J_(k, j);
        J_(k, j - 1) = c * t1 + s * t2;
        J_(k, j) = -s * t1 + c * t2;
      }
    }
    // Rotations above only mix null-space columns of J, so rejecting a
    // dependent normal leaves the factorisation valid.
    const double scale = std::max(1.0, d.head(q_ + 1).cwiseAbs().maxCoeff());
    if (!(std::abs(d(q_)) > 1e-13 * scale)) return false;
    for (int i = 0; i <= q_; ++i) R_(i, q_) = d(i);
    ++q_;
    return true;
  }

  void drop_constraint(int l) {
    const int c = active_[static_cast<std::size_t>(l)];
    iactive_[static_cast<std::size_t>(c)] = false;
    active_.erase(active_.begin() + l);
    for (int j = l; j < q_ - 1; ++j) u_(j) = u_(j + 1);
    u_.conservativeResize(q_ - 1);
    for (int j = l; j < q_ - 1; ++j) R_.col(j) = R_.col(j + 1);
    R_.col(q_ - 1).setZero();
    --q_;
    // Restore upper-triangular form of R.
    for (int j = l; j < q_; ++j) {
      double cc, ss, h;
      givens(R_(j, j), R_(j + 1, j), cc, ss, h);
      if (ss == 0.0) continue;
      for (int k = j; k < q_; ++k) {
        const double t1 = R_(j, k);
        const double t2 = R_(j + 1, k);
        R_(j, k) = cc * t1 + ss * t2;
        R_(j + 1, k) = -ss * t1 + cc * t2;
      }
      R_(j + 1, j) = 0.0;
      for (int k = 0; k < n_; ++k) {
        const double t1 = J_(k, j);
        const double t2 = J_(k, j + 1);
        J_(k, j) = cc * t1 + ss * t2;
        J_(k, j + 1) = -ss * t1 + cc * t2;
      }
    }
  }

  const MatrixXd& G_;
  const VectorXd& a_;
  const MatrixXd& N_;
  const VectorXd& b_;
  int meq_;
  int max_iter_;
  int n_ = 0, m_ = 0, q_ = 0;
  MatrixXd J_, R_;
  VectorXd y_, u_;
  std::vector<int> active_;
  std::vector<bool> iactive_;
};

}  // namespace

void QpProblem::check_dimensions() const {
  const auto n = H.rows();
  if (H.cols() != n) throw std::invalid_argument("QP: H must be square");
  if (f.size() != n) throw std::invalid_argument("QP: f length must match H");
  if (L.rows() > 0 && L.cols() != n) throw std::invalid_argument("QP: L column count must match H");
  if (W.size() != L.rows()) throw std::invalid_argument("QP: W length must match L rows");
  if (Aeq.rows() > 0 && Aeq.cols() != n) throw std::invalid_argument("QP: Aeq column count must match H");
  if (beq.size() != Aeq.rows()) throw std::invalid_argument("QP: beq length must match Aeq rows");
}

const char* to_string(QpStatus s) {
  switch (s) {
    case QpStatus::optimal: return "optimal";
    case QpStatus::infeasible: return "infeasible";
    case QpStatus::max_iterations: return "max-iterations";
  }
  return "unknown";
}

VectorXd solve_unconstrained(const MatrixXd& H, const VectorXd& f) {
  if (H.rows() != H.cols() || H.rows() != f.size())
    throw std::invalid_argument("solve_unconstrained: dimension mismatch");
  Eigen::LLT<MatrixXd> llt(H);
  if (llt.info() != Eigen::Success) throw SolverError("Hessian is not positive definite");
  const VectorXd u = -llt.solve(f);
  if (!u.allFinite()) throw SolverError("Hessian is numerically singular");
  return u;
}

KktResiduals kkt_residuals(const QpProblem& p, const VectorXd& u, const VectorXd& lambda,
                           const VectorXd& mu) {
  KktResiduals k;
  VectorXd g = p.H * u + p.f;
  if (p.inequalities() > 0) {
    VectorXd lam = lambda;
    for (int i = 0; i < p.inequalities(); ++i)
      if (!std::isfinite(p.W(i))) lam(i) = 0.0;
    g.noalias() += p.L.transpose() * lam;
    const VectorXd s = p.L * u - p.W;
    for (int i = 0; i < p.inequalities(); ++i) {
      if (!std::isfinite(p.W(i))) continue;
      k.primal = std::max(k.primal, s(i));
      k.complementarity = std::max(k.complementarity, std::abs(lambda(i) * s(i)));
      k.dual = std::max(k.dual, -lambda(i));
    }
  }
  if (p.equalities() > 0) {
    g.noalias() += p.Aeq.transpose() * mu;
    k.primal = std::max(k.primal, (p.Aeq * u - p.beq).cwiseAbs().maxCoeff());
  }
  k.stationarity = g.size() > 0 ? g.cwiseAbs().maxCoeff() : 0.0;
  return k;
}

QpSolution QpSolver::solve(const QpProblem& p) {
  p.check_dimensions();
  const int n = p.variables();
  const int mi = p.inequalities();
  const int me = p.equalities();

  QpSolution sol;
  sol.lambda = VectorXd::Zero(mi);
  sol.mu = VectorXd::Zero(me);

  VectorXd D = VectorXd::Ones(n);
  if (settings_.scale) {
    for (int i = 0; i < n; ++i) {
      if (!(p.H(i, i) > 0.0)) throw SolverError("QP Hessian has a non-positive diagonal");
      D(i) = 1.0 / std::sqrt(p.H(i, i));
    }
  }
  const MatrixXd G = D.asDiagonal() * p.H * D.asDiagonal();
  const VectorXd a = D.cwiseProduct(p.f);

  // Normalised constraint normals in the scaled variables, equalities first.
  std::vector<int> source;  // original row; equalities encoded as -(k+1)
  std::vector<double> rho;
  std::vector<VectorXd> cols;
  std::vector<double> rhs;
  for (int k = 0; k < me; ++k) {
    const VectorXd row = p.Aeq.row(k).transpose().cwiseProduct(D);
    const double nr = row.norm();
    if (nr == 0.0) {
      if (std::abs(p.beq(k)) > settings_.tol) {
        sol.status = QpStatus::infeasible;
        sol.u = VectorXd::Zero(n);
        return sol;
      }
      continue;
    }
    source.push_back(-(k + 1));
    rho.push_back(nr);
    cols.push_back(row / nr);
    rhs.push_back(p.beq(k) / nr);
  }
  const int meq = static_cast<int>(cols.size());
  for (int i = 0; i < mi; ++i) {
    if (!std::isfinite(p.W(i))) {
      if (p.W(i) < 0) {
        sol.status = QpStatus::infeasible;
        sol.u = VectorXd::Zero(n);
        return sol;
      }
      continue;
    }
    const VectorXd row = p.L.row(i).transpose().cwiseProduct(D);
    const double nr = row.norm();
    if (nr == 0.0) {
      if (p.W(i) < -settings_.tol) {
        sol.status = QpStatus::infeasible;
        sol.u = VectorXd::Zero(n);
        VectorXd cert = VectorXd::Zero(mi);
        cert(i) = 1.0;
        sol.certificate = cert;
        return sol;
      }
      continue;
    }
    source.push_back(i);
    rho.push_back(nr);
    cols.push_back(-row / nr);
    rhs.push_back(-p.W(i) / nr);
  }
  const int m = static_cast<int>(cols.size());
  MatrixXd N(n, m);
  VectorXd b(m);
  for (int j = 0; j < m; ++j) {
    N.col(j) = cols[static_cast<std::size_t>(j)];
    b(j) = rhs[static_cast<std::size_t>(j)];
  }

  const int max_iter = settings_.max_iterations > 0 ? settings_.max_iterations : 10 * (n + m) + 10;
  DualActiveSet engine(G, a, N, b, meq, max_iter);
  const auto res = engine.run(1e-3 * settings_.tol);

  sol.status = res.status;
  sol.iterations = res.iterations;
  sol.active = res.active_inequalities;
  sol.u = D.cwiseProduct(res.y);
  for (int j = 0; j < m; ++j) {
    const int src = source[static_cast<std::size_t>(j)];
    const double mult = res.u(j) / rho[static_cast<std::size_t>(j)];
    if (src >= 0)
      sol.lambda(src) = mult;
    else
      sol.mu(-src - 1) = -mult;
  }

  if (res.status == QpStatus::infeasible && meq == 0) {
    VectorXd cert = VectorXd::Zero(mi);
    cert(source[static_cast<std::size_t>(res.blocking)]) = 1.0 / rho[static_cast<std::size_t>(res.blocking)];
    for (std::size_t j = 0; j < res.active.size(); ++j) {
      const int c = res.active[j];
      cert(source[static_cast<std::size_t>(c)]) +=
          std::max(0.0, -res.r(static_cast<Eigen::Index>(j))) / rho[static_cast<std::size_t>(c)];
    }
    sol.certificate = cert;
  }

  sol.kkt = kkt_residuals(p, sol.u, sol.lambda, sol.mu);
  return sol;
}

QpSolution solve(const QpProblem& problem, const QpSettings& settings) {
  QpSolver solver(settings);
  return solver.solve(problem);
}

}  // namespace perimeter
