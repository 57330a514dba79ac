#pragma once

#include <filesystem>
#include <iosfwd>

#include <Eigen/Dense>

#include "perimeter/linear_model.hpp"
#include "perimeter/qp.hpp"

namespace perimeter {

// Matrix files are plain CSV: one matrix row per line, comma-separated,
// "inf"/"-inf" for unbounded entries. Vectors are stored as a single column.
// An empty matrix is an empty file.

void write_matrix(std::ostream& os, const Eigen::MatrixXd& m);
[[nodiscard]] Eigen::MatrixXd read_matrix(std::istream& is);

void save_matrix(const std::filesystem::path& path, const Eigen::MatrixXd& m);
[[nodiscard]] Eigen::MatrixXd load_matrix(const std::filesystem::path& path);

/// Writes H, f, L, W, Aeq, beq as <name>.csv into `dir` (created if needed).
void save_problem(const std::filesystem::path& dir, const QpProblem& p);
/// Reads a directory written by save_problem; Aeq/beq may be absent.
[[nodiscard]] QpProblem load_problem(const std::filesystem::path& dir);

/// Writes A, B, C, x_hat, u_hat, d_hat and the condensed Phi, Gamma, Z, H, F,
/// G, L, W0, Wx, Wd.
void save_condensed(const std::filesystem::path& dir, const LinearModel& model, const CondensedQp& qp);

}  // namespace perimeter
