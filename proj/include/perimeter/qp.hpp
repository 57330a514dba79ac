#pragma once

#include <optional>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace perimeter {

/// min 1/2 U'HU + f'U  s.t.  L U <= W  (and optionally Aeq U = beq).
/// Rows with W = +inf are ignored.
struct QpProblem {
  Eigen::MatrixXd H;
  Eigen::VectorXd f;
  Eigen::MatrixXd L;
  Eigen::VectorXd W;
  Eigen::MatrixXd Aeq;
  Eigen::VectorXd beq;

  [[nodiscard]] int variables() const { return static_cast<int>(H.rows()); }
  [[nodiscard]] int inequalities() const { return static_cast<int>(L.rows()); }
  [[nodiscard]] int equalities() const { return static_cast<int>(Aeq.rows()); }
  [[nodiscard]] double objective(const Eigen::VectorXd& u) const {
    return 0.5 * u.dot(H * u) + f.dot(u);
  }
  /// Throws std::invalid_argument on inconsistent dimensions.
  void check_dimensions() const;
};

enum class QpStatus { optimal, infeasible, max_iterations };

[[nodiscard]] const char* to_string(QpStatus s);

struct KktResiduals {
  double stationarity = 0.0;     ///< ||HU + f + L'lambda + Aeq'mu||_inf
  double primal = 0.0;           ///< max(LU - W)_+ and |Aeq U - beq|
  double complementarity = 0.0;  ///< max |lambda_i (LU - W)_i|
  double dual = 0.0;             ///< max(-lambda)_+
};

struct QpSolution {
  QpStatus status = QpStatus::optimal;
  Eigen::VectorXd u;
  Eigen::VectorXd lambda;  ///< inequality multipliers
  Eigen::VectorXd mu;      ///< equality multipliers
  KktResiduals kkt;
  int iterations = 0;
  int active = 0;  ///< active inequality rows at exit
  /// For infeasible problems: lambda >= 0 with L'lambda = 0 and W'lambda < 0.
  std::optional<Eigen::VectorXd> certificate;
};

class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct QpSettings {
  double tol = 1e-8;
  int max_iterations = 0;  ///< 0 selects 10 * (variables + rows)
  bool scale = true;       ///< symmetric diagonal scaling by diag(H)^-1/2
};

/// U = -H^{-1} f through a Cholesky factorisation. Throws SolverError if H is
/// not numerically positive definite.
[[nodiscard]] Eigen::VectorXd solve_unconstrained(const Eigen::MatrixXd& H, const Eigen::VectorXd& f);

/// KKT residuals of a candidate primal/dual pair.
[[nodiscard]] KktResiduals kkt_residuals(const QpProblem& p, const Eigen::VectorXd& u,
                                         const Eigen::VectorXd& lambda, const Eigen::VectorXd& mu);

/// Dense dual active-set solver (Goldfarb-Idnani). The solver owns its
/// workspace; use one instance per thread.
class QpSolver {
 public:
  explicit QpSolver(QpSettings settings = {}) : settings_(settings) {}

  [[nodiscard]] QpSolution solve(const QpProblem& problem);

  [[nodiscard]] const QpSettings& settings() const { return settings_; }

 private:
  QpSettings settings_;
};

/// Convenience wrapper around a fresh QpSolver.
[[nodiscard]] QpSolution solve(const QpProblem& problem, const QpSettings& settings = {});

}  // namespace perimeter
