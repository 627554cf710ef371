#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "csvm/dataset.hpp"
#include "csvm/kernel.hpp"
#include "csvm/qp_engine.hpp"

namespace csvm {

using qp::QpStatus;

/// Penalties for the slack terms. In coupled mode C+ = C/|I+| and
/// C- = C/|I-|, where |I+-| is the total instance weight of that class.
struct PenaltyConfig {
  enum class Coupling { coupled, independent };
  Coupling coupling = Coupling::coupled;
  double C = 1.0;
  double c_plus = 1.0, c_minus = 1.0;  // independent mode

  static PenaltyConfig coupled(double C) { return {Coupling::coupled, C, 1.0, 1.0}; }
  static PenaltyConfig independent(double c_plus, double c_minus) {
    return {Coupling::independent, 1.0, c_plus, c_minus};
  }

  void validate() const;
  /// (C+, C-) for a training set with the given class weights.
  std::pair<double, double> resolve(double positive_weight, double negative_weight) const;
};

/// Per-instance slack coefficients c_i = C_{y_i} * w_i.
Eigen::VectorXd slack_penalties(const Eigen::VectorXd& labels, const Eigen::VectorXd& weights,
                                double c_plus, double c_minus);

enum class AnchorStatus { relaxed, fixed_one, fixed_zero };

/// sum over `scope` (indices into J) of z_j >= required.
struct AnchorCount {
  std::vector<std::size_t> scope;
  std::size_t required = 0;
};

/// Representer-form problem over I (first n_train) and J (next n_anchor):
///
///   min  a'Ka + sum_I c_i xi_i,    a = y o (lambda, mu)
///   s.t. y_i f(x_i) >= 1 - xi_i             i in I
///        y_j f(x_j) >= 1 - M1 (1 - z_j)     j in J
///        sum lambda y + sum mu y = 0
///        0 <= lambda_i <= c_i / 2,  0 <= mu_j <= M2 z_j,  xi >= 0
///        z_j in [0,1] (relaxed) or fixed, count rows on z
///
/// with f(x) = sum_s a_s K(x_s, x) + beta.
struct QpProblem {
  Eigen::MatrixXd gram;     // (n_train + n_anchor) square
  Eigen::VectorXd labels;   // +-1, same order as gram
  Eigen::VectorXd penalty;  // c_i over I
  std::size_t n_train = 0;
  std::size_t n_anchor = 0;
  double M1 = 100.0;
  double M2 = 100.0;
  std::vector<AnchorStatus> status;  // over J; empty means all relaxed
  std::vector<AnchorCount> counts;

  void validate() const;
  std::size_t size() const { return n_train + n_anchor; }
};

struct QpSolution {
  Eigen::VectorXd lambda;  // over I
  Eigen::VectorXd mu;      // over J
  double beta = 0.0;
  Eigen::VectorXd xi;      // over I
  Eigen::VectorXd z;       // over J
  /// y o (lambda, mu): the expansion coefficients over I then J.
  Eigen::VectorXd alpha;
  double objective = 0.0;
  QpStatus status = QpStatus::max_iter;
  int iterations = 0;
  qp::KktResiduals residuals;
  /// Engine iterate, reusable as a warm start.
  qp::QpResult raw;
};

/// Builds the engine matrices for a problem; anchor statuses only affect
/// the variable bounds, so the returned solver can be reused across nodes.
class NodeQp {
 public:
  NodeQp(const QpProblem& problem, qp::QpSettings settings = {});

  QpSolution solve(const std::vector<AnchorStatus>& status, const qp::QpResult* warm = nullptr);
  const qp::DenseQp& dense() const { return solver_.problem(); }
  qp::QpSettings& settings() { return solver_.settings(); }

  /// Variable layout.
  Eigen::Index v_offset() const { return 0; }
  Eigen::Index beta_index() const { return static_cast<Eigen::Index>(n_train_ + n_anchor_); }
  Eigen::Index xi_offset() const { return beta_index() + 1; }
  Eigen::Index z_offset() const { return xi_offset() + static_cast<Eigen::Index>(n_train_); }

 private:
  QpSolution unpack(const qp::QpResult& r) const;

  std::size_t n_train_, n_anchor_;
  Eigen::VectorXd labels_;
  Eigen::VectorXd penalty_;
  double M2_;
  qp::AdmmSolver solver_;
};

/// Template with every anchor relaxed.
qp::DenseQp build_dense_qp(const QpProblem& problem);
/// Variable bounds of mu and z for the given statuses (empty = relaxed).
void apply_anchor_status(const std::vector<AnchorStatus>& status, std::size_t n_train, std::size_t n_anchor,
                         double M2, Eigen::VectorXd& lb, Eigen::VectorXd& ub);

/// Solves the problem with its own anchor statuses. `tol` bounds the KKT
/// residual of an optimal result.
QpSolution solve_qp(const QpProblem& problem, const QpSolution* warm = nullptr, double tol = 1e-6);

/// Standard (class-weighted) SVM on a single training set, solved in the
/// dual with SMO. `penalty` holds c_i; the box is 0 <= lambda_i <= c_i / 2.
QpSolution solve_standard_svm(const Eigen::MatrixXd& gram, const Eigen::VectorXd& labels,
                              const Eigen::VectorXd& penalty, double tol = 1e-10);
QpSolution solve_standard_svm(const Dataset& train, const PenaltyConfig& penalties, const KernelSpec& spec);

/// score = cross * alpha + beta, where cross holds K(query, x_s) with the
/// columns in the same order as the training data of `solution`.
Eigen::VectorXd decision_scores(const QpSolution& solution, const Eigen::MatrixXd& cross);

/// a'Ka + sum c_i max(0, 1 - y_i f(x_i)) over I.
double primal_objective(const Eigen::MatrixXd& gram_ii, const Eigen::VectorXd& labels,
                        const Eigen::VectorXd& penalty, const Eigen::VectorXd& alpha, double beta);

/// Plain-text dump of the engine matrices in coordinate format.
void dump_qp(const QpProblem& problem, const std::filesystem::path& path);

}  // namespace csvm
