#include "perimeter/matrix_io.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace perimeter {

namespace fs = std::filesystem;

void write_matrix(std::ostream& os, const Eigen::MatrixXd& m) {
  const auto old = os.precision(17);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) os << ',';
      const double v = m(i, j);
      if (std::isinf(v)) os << (v > 0 ? "inf" : "-inf");
      else os << v;
    }
    os << '\n';
  }
  os.precision(old);
}

Eigen::MatrixXd read_matrix(std::istream& is) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        const double v = std::stod(cell, &used);
        row.push_back(v);
      } catch (const std::exception&) {
        throw std::runtime_error("matrix line " + std::to_string(lineno) + ": bad number '" + cell + "'");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw std::runtime_error("matrix line " + std::to_string(lineno) + ": ragged row");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) return {};
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return m;
}

void save_matrix(const fs::path& path, const Eigen::MatrixXd& m) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path.string() + ": cannot write");
  write_matrix(out, m);
}

Eigen::MatrixXd load_matrix(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path.string() + ": cannot read");
  return read_matrix(in);
}

void save_problem(const fs::path& dir, const QpProblem& p) {
  fs::create_directories(dir);
  save_matrix(dir / "H.csv", p.H);
  save_matrix(dir / "f.csv", p.f);
  save_matrix(dir / "L.csv", p.L);
  save_matrix(dir / "W.csv", p.W);
  save_matrix(dir / "Aeq.csv", p.Aeq);
  save_matrix(dir / "beq.csv", p.beq);
}

QpProblem load_problem(const fs::path& dir) {
  QpProblem p;
  p.H = load_matrix(dir / "H.csv");
  const Eigen::Index n = p.H.rows();
  auto vec = [](const Eigen::MatrixXd& m) -> Eigen::VectorXd {
    if (m.size() == 0) return {};
    if (m.cols() != 1) throw std::runtime_error("expected a single-column vector file");
    return m.col(0);
  };
  p.f = vec(load_matrix(dir / "f.csv"));
  if (fs::exists(dir / "L.csv")) {
    p.L = load_matrix(dir / "L.csv");
    p.W = vec(load_matrix(dir / "W.csv"));
  }
  if (p.L.size() == 0) p.L.resize(0, n);
  if (fs::exists(dir / "Aeq.csv")) {
    p.Aeq = load_matrix(dir / "Aeq.csv");
    p.beq = vec(load_matrix(dir / "beq.csv"));
  }
  if (p.Aeq.size() == 0) p.Aeq.resize(0, n);
  p.check_dimensions();
  return p;
}

void save_condensed(const fs::path& dir, const LinearModel& model, const CondensedQp& qp) {
  fs::create_directories(dir);
  save_matrix(dir / "A.csv", model.A);
  save_matrix(dir / "B.csv", model.B);
  save_matrix(dir / "C.csv", model.C);
  save_matrix(dir / "x_hat.csv", model.x_hat);
  save_matrix(dir / "u_hat.csv", model.u_hat);
  save_matrix(dir / "d_hat.csv", model.d_hat);
  save_matrix(dir / "Phi.csv", qp.Phi);
  save_matrix(dir / "Gamma.csv", qp.Gamma);
  save_matrix(dir / "Z.csv", qp.Z);
  save_matrix(dir / "H.csv", qp.H);
  save_matrix(dir / "F.csv", qp.F);
  save_matrix(dir / "G.csv", qp.G);
  save_matrix(dir / "L.csv", qp.L);
  save_matrix(dir / "W0.csv", qp.W0);
  save_matrix(dir / "Wx.csv", qp.Wx);
  save_matrix(dir / "Wd.csv", qp.Wd);
}

}  // namespace perimeter
