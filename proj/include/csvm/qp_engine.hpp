#pragma once

#include <chrono>
#include <optional>
#include <string>

#include <Eigen/Dense>

namespace csvm::qp {

/// Bounds with magnitude at or above this are treated as infinite.
inline constexpr double kInf = 1e30;

inline bool is_inf(double b) { return b >= 1e20 || b <= -1e20; }

/// minimize 1/2 x'Px + q'x  subject to  l <= Ax <= u,  lb <= x <= ub.
/// P must be symmetric positive semidefinite.
struct DenseQp {
  Eigen::MatrixXd P;
  Eigen::VectorXd q;
  Eigen::MatrixXd A;
  Eigen::VectorXd l, u;
  Eigen::VectorXd lb, ub;

  Eigen::Index num_vars() const { return q.size(); }
  Eigen::Index num_rows() const { return A.rows(); }
  void validate() const;
};

enum class QpStatus { optimal, infeasible, max_iter };
std::string to_string(QpStatus s);

struct KktResiduals {
  double stationarity = 0.0;     // |Px + q + A'y + w|_inf
  double primal = 0.0;           // bound / row violation
  double complementarity = 0.0;  // covers dual sign feasibility too
  double max() const;
};

/// Sign convention: y_i > 0 pushes against the upper bound u_i, y_i < 0
/// against the lower bound l_i; same for the bound multipliers w.
KktResiduals kkt_residuals(const DenseQp& qp, const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                           const Eigen::VectorXd& w);

struct QpSettings {
  double eps_abs = 1e-8;
  double eps_rel = 1e-8;
  double eps_infeasible = 1e-7;
  int max_iter = 20000;
  double rho = 0.1;
  double sigma = 1e-6;
  double alpha = 1.6;
  bool adaptive_rho = true;
  int adaptive_rho_interval = 50;
  int check_interval = 5;
  int scaling_iters = 10;
  bool polish = true;
  int polish_refine_iters = 8;
  /// Active-set corrections per interior-point polish attempt.
  int polish_rounds = 6;
  double polish_delta = 1e-10;
  /// Polish is also tried before convergence, first at this iteration and
  /// then at geometrically growing gaps; 0 disables early attempts.
  int polish_interval = 100;
  /// Problems with at most this many variables are first attempted with
  /// the interior-point method; ADMM runs only if that does not converge.
  int ipm_max_vars = 2000;
  int ipm_max_iter = 80;
  /// Above this size the Newton system is solved through its normal
  /// equations instead of being factored whole.
  int ipm_augmented_max = 600;
  /// Residual level at which a returned solution counts as optimal.
  double kkt_tol = 1e-6;
  std::optional<std::chrono::steady_clock::time_point> deadline;
};

struct QpResult {
  Eigen::VectorXd x, y, w;
  QpStatus status = QpStatus::max_iter;
  double objective = 0.0;
  int iterations = 0;
  bool polished = false;
  KktResiduals residuals;
};

/// Operator-splitting (ADMM) solver in the OSQP style: Ruiz equilibration,
/// a cached factorization of the regularized reduced KKT matrix, adaptive
/// step size, infeasibility certificates and a polish step that solves the
/// equality-constrained problem on the detected active set.
///
/// Matrix data (P, q, A) is fixed for the lifetime of the solver; bounds
/// may be changed between solves, which is what branch-and-bound needs.
class AdmmSolver {
 public:
  explicit AdmmSolver(DenseQp problem, QpSettings settings = {});

  const DenseQp& problem() const { return qp_; }
  QpSettings& settings() { return settings_; }

  void set_bounds(const Eigen::VectorXd& lb, const Eigen::VectorXd& ub);
  void set_row_bounds(const Eigen::VectorXd& l, const Eigen::VectorXd& u);

  /// `warm` may come from a solve with different bounds.
  QpResult solve(const QpResult* warm = nullptr);

 private:
  void compute_scaling();
  void build_gram();
  void rho_vectors(double rho, Eigen::VectorXd& rho_g, Eigen::VectorXd& rho_b) const;
  bool factor(double rho);
  bool polish(const Eigen::VectorXd& xs, const Eigen::VectorXd& zg, const Eigen::VectorXd& zb,
              const Eigen::VectorXd& yg, const Eigen::VectorXd& yb, QpResult& out) const;
  void finish(QpResult& r) const;

  DenseQp qp_;
  QpSettings settings_;

  // Scaled data: x = D xs, Ps = c D P D, qs = c D q, As = E A D.
  Eigen::VectorXd d_, e_;
  double c_ = 1.0;
  Eigen::MatrixXd Ps_, As_;
  Eigen::VectorXd qs_;
  Eigen::VectorXd ls_, us_, lbs_, ubs_;
  Eigen::VectorXd row_pattern_;  // 1 or 1e3 (equality) per general row
  Eigen::MatrixXd as_weighted_gram_;  // As' diag(row_pattern) As

  double rho_ = 0.1;
  double factored_rho_ = -1.0;
  Eigen::VectorXd rho_g_, rho_b_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  bool bounds_changed_ = true;
};

/// Dense primal-dual interior-point method (Mehrotra predictor-corrector).
/// Never certifies infeasibility: a problem it cannot solve to `kkt_tol`
/// comes back as max_iter.
QpResult solve_interior_point(const DenseQp& qp, const QpSettings& settings = {});

/// Convenience wrapper: one-shot solve.
QpResult solve_dense_qp(const DenseQp& qp, const QpSettings& settings = {}, const QpResult* warm = nullptr);

}  // namespace csvm::qp
