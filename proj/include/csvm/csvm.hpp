#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "csvm/kernel.hpp"
#include "csvm/metrics.hpp"
#include "csvm/qp.hpp"

namespace csvm {

enum class SolveStatus { proven_optimal, incumbent_at_timeout, infeasible, no_incumbent };
std::string to_string(SolveStatus s);

/// Mixed-integer problem: the relaxed QP template plus the count rows.
/// `qp.counts` carries one scope per entry of `constraints`.
struct CsvmProblem {
  QpProblem qp;
  std::vector<CountConstraint> constraints;
  KernelSpec kernel;  // descriptive; the gram in `qp` is authoritative
  double time_limit = 300.0;  // seconds; <= 0 disables the limit
  std::size_t node_limit = 0;  // 0 = unlimited
  double node_tol = 1e-6;
  double integrality_tol = 1e-5;
  bool verbose = false;

  void validate() const;
};

/// Scope over J (indices into J) for a rate: positives, negatives or all.
std::vector<std::size_t> anchor_scope(RateKind rate, const Eigen::VectorXd& anchor_labels);

/// Problem over I then J with one count row per target. `weights` covers I.
CsvmProblem make_csvm_problem(const Eigen::MatrixXd& gram, const Eigen::VectorXd& labels,
                              const Eigen::VectorXd& weights, std::size_t n_train, double c_plus, double c_minus,
                              std::span<const CountConstraint> constraints, const KernelSpec& kernel,
                              double M1 = 100.0, double M2 = 100.0);

struct CsvmModel {
  QpSolution solution;    // node QP with every z fixed
  std::vector<int> z;     // 0/1 over J
  double objective = 0.0;
  double gap = 0.0;
  SolveStatus status = SolveStatus::no_incumbent;
  double wall_seconds = 0.0;
  std::size_t nodes = 0;
  std::string message;  // infeasibility diagnosis, warm-start notes
  std::vector<std::pair<double, double>> incumbent_history;  // (seconds, objective)
};

/// Count rows must hold as integers and every z_j = 1 anchor must satisfy
/// its margin within `tol`. Returns an empty string when the model passes.
std::string check_model(const CsvmProblem& problem, const CsvmModel& model, double tol = 1e-6);

struct WarmStart {
  std::optional<CsvmModel> model;
  double beta_shift = 0.0;
  std::string note;
};

/// Starting incumbent from an SVM trained on I and J together (same kernel
/// and penalties): the intercept is slid until the count targets hold on J,
/// z marks the anchors the shifted classifier gets right, and the node QP
/// is re-solved with that z fixed.
WarmStart warm_start_from_svm(const QpSolution& svm, const CsvmProblem& problem);

/// Best-first branch-and-bound over the anchor indicators.
CsvmModel solve_csvm(const CsvmProblem& problem, const CsvmModel* warm = nullptr);

/// Per-constraint feasibility notes that need no solve.
struct FeasibilityReport {
  struct Entry {
    RateKind rate;
    std::string verdict;
  };
  std::vector<Entry> entries;
  std::string summary;
};
FeasibilityReport diagnose_feasibility(const CsvmProblem& problem);

}  // namespace csvm
