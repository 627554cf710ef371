#include "csvm/qp.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace csvm {

void PenaltyConfig::validate() const {
  if (coupling == Coupling::coupled) {
    if (!(C > 0.0)) throw std::invalid_argument("penalty C must be positive");
  } else if (!(c_plus > 0.0) || !(c_minus > 0.0)) {
    throw std::invalid_argument("penalties C+ and C- must be positive");
  }
}

std::pair<double, double> PenaltyConfig::resolve(double positive_weight, double negative_weight) const {
  validate();
  if (coupling == Coupling::independent) return {c_plus, c_minus};
  if (!(positive_weight > 0.0) || !(negative_weight > 0.0))
    throw std::invalid_argument("coupled penalties need both classes in the training set");
  return {C / positive_weight, C / negative_weight};
}

Eigen::VectorXd slack_penalties(const Eigen::VectorXd& labels, const Eigen::VectorXd& weights,
                                double c_plus, double c_minus) {
  if (labels.size() != weights.size()) throw std::invalid_argument("slack_penalties: size mismatch");
  Eigen::VectorXd c(labels.size());
  for (Eigen::Index i = 0; i < labels.size(); ++i) c(i) = (labels(i) > 0 ? c_plus : c_minus) * weights(i);
  return c;
}

void QpProblem::validate() const {
  const auto n = static_cast<Eigen::Index>(size());
  if (gram.rows() != n || gram.cols() != n) throw std::invalid_argument("QpProblem: gram size does not match I and J");
  if (labels.size() != n) throw std::invalid_argument("QpProblem: label count does not match I and J");
  if (penalty.size() != static_cast<Eigen::Index>(n_train))
    throw std::invalid_argument("QpProblem: penalty count does not match I");
  for (Eigen::Index i = 0; i < labels.size(); ++i)
    if (labels(i) != 1.0 && labels(i) != -1.0) throw std::invalid_argument("QpProblem: labels must be +-1");
  for (Eigen::Index i = 0; i < penalty.size(); ++i)
    if (!(penalty(i) > 0.0)) throw std::invalid_argument("QpProblem: penalties must be positive");
  if (!(M1 > 0.0) || !(M2 > 0.0)) throw std::invalid_argument("QpProblem: big-M constants must be positive");
  if (!status.empty() && status.size() != n_anchor) throw std::invalid_argument("QpProblem: status size != |J|");
  for (const auto& c : counts) {
    if (c.required > c.scope.size()) throw std::invalid_argument("QpProblem: count requires more than its scope");
    for (auto j : c.scope)
      if (j >= n_anchor) throw std::invalid_argument("QpProblem: count scope index out of range");
  }
}

qp::DenseQp build_dense_qp(const QpProblem& pb) {
  pb.validate();
  const auto nI = static_cast<Eigen::Index>(pb.n_train);
  const auto nJ = static_cast<Eigen::Index>(pb.n_anchor);
  const Eigen::Index nv = nI + nJ;
  const Eigen::Index ib = nv, ix = nv + 1, iz = nv + 1 + nI;
  const Eigen::Index n = iz + nJ;
  const auto nc = static_cast<Eigen::Index>(pb.counts.size());
  const Eigen::Index m = nI + nJ + 1 + nJ + nc;
  const Eigen::VectorXd& y = pb.labels;

  qp::DenseQp d;
  const Eigen::MatrixXd yky = y.asDiagonal() * pb.gram * y.asDiagonal();
  d.P = Eigen::MatrixXd::Zero(n, n);
  d.P.topLeftCorner(nv, nv) = 2.0 * yky;
  d.q = Eigen::VectorXd::Zero(n);
  d.q.segment(ix, nI) = pb.penalty;

  d.A = Eigen::MatrixXd::Zero(m, n);
  d.l = Eigen::VectorXd::Constant(m, -qp::kInf);
  d.u = Eigen::VectorXd::Constant(m, qp::kInf);
  // Margin rows: y_r f(x_r) = sum_s y_r K_rs y_s v_s + y_r beta.
  for (Eigen::Index r = 0; r < nv; ++r) {
    d.A.row(r).head(nv) = yky.row(r);
    d.A(r, ib) = y(r);
    if (r < nI) {
      d.A(r, ix + r) = 1.0;
      d.l(r) = 1.0;
    } else {
      d.A(r, iz + (r - nI)) = -pb.M1;
      d.l(r) = 1.0 - pb.M1;
    }
  }
  const Eigen::Index eq = nv;
  d.A.row(eq).head(nv) = y.transpose();
  d.l(eq) = d.u(eq) = 0.0;
  for (Eigen::Index j = 0; j < nJ; ++j) {
    const Eigen::Index r = eq + 1 + j;
    d.A(r, nI + j) = 1.0;
    d.A(r, iz + j) = -pb.M2;
    d.u(r) = 0.0;
  }
  for (Eigen::Index k = 0; k < nc; ++k) {
    const Eigen::Index r = eq + 1 + nJ + k;
    for (auto j : pb.counts[static_cast<std::size_t>(k)].scope) d.A(r, iz + static_cast<Eigen::Index>(j)) = 1.0;
    d.l(r) = static_cast<double>(pb.counts[static_cast<std::size_t>(k)].required);
  }

  d.lb = Eigen::VectorXd::Zero(n);
  d.ub = Eigen::VectorXd::Constant(n, qp::kInf);
  d.ub.head(nI) = 0.5 * pb.penalty;
  d.ub.segment(nI, nJ).setConstant(pb.M2);
  d.lb(ib) = -qp::kInf;
  d.ub.segment(iz, nJ).setOnes();
  return d;
}

void apply_anchor_status(const std::vector<AnchorStatus>& status, std::size_t n_train, std::size_t n_anchor,
                         double M2, Eigen::VectorXd& lb, Eigen::VectorXd& ub) {
  if (!status.empty() && status.size() != n_anchor) throw std::invalid_argument("anchor status size != |J|");
  const auto nI = static_cast<Eigen::Index>(n_train), nJ = static_cast<Eigen::Index>(n_anchor);
  const Eigen::Index z0 = nI + nJ + 1 + nI;
  for (Eigen::Index j = 0; j < nJ; ++j) {
    const auto s = status.empty() ? AnchorStatus::relaxed : status[static_cast<std::size_t>(j)];
    const Eigen::Index mu = nI + j, z = z0 + j;
    lb(mu) = 0.0;
    ub(mu) = s == AnchorStatus::fixed_zero ? 0.0 : M2;
    lb(z) = s == AnchorStatus::fixed_one ? 1.0 : 0.0;
    ub(z) = s == AnchorStatus::fixed_zero ? 0.0 : 1.0;
  }
}

NodeQp::NodeQp(const QpProblem& problem, qp::QpSettings settings)
    : n_train_(problem.n_train),
      n_anchor_(problem.n_anchor),
      labels_(problem.labels),
      penalty_(problem.penalty),
      M2_(problem.M2),
      solver_(build_dense_qp(problem), settings) {}

QpSolution NodeQp::solve(const std::vector<AnchorStatus>& status, const qp::QpResult* warm) {
  Eigen::VectorXd lb = solver_.problem().lb, ub = solver_.problem().ub;
  apply_anchor_status(status, n_train_, n_anchor_, M2_, lb, ub);
  solver_.set_bounds(lb, ub);
  return unpack(solver_.solve(warm));
}

QpSolution NodeQp::unpack(const qp::QpResult& r) const {
  const auto nI = static_cast<Eigen::Index>(n_train_);
  const auto nJ = static_cast<Eigen::Index>(n_anchor_);
  QpSolution s;
  s.lambda = r.x.head(nI);
  s.mu = r.x.segment(nI, nJ);
  s.beta = r.x(beta_index());
  s.xi = r.x.segment(xi_offset(), nI);
  s.z = r.x.segment(z_offset(), nJ);
  s.alpha = labels_.cwiseProduct(r.x.head(nI + nJ));
  s.objective = r.objective;
  s.status = r.status;
  s.iterations = r.iterations;
  s.residuals = r.residuals;
  s.raw = r;
  return s;
}

QpSolution solve_qp(const QpProblem& problem, const QpSolution* warm, double tol) {
  qp::QpSettings settings;
  settings.kkt_tol = tol;
  NodeQp node(problem, settings);
  return node.solve(problem.status, warm ? &warm->raw : nullptr);
}

Eigen::VectorXd decision_scores(const QpSolution& solution, const Eigen::MatrixXd& cross) {
  if (cross.cols() != solution.alpha.size())
    throw std::invalid_argument("decision_scores: kernel rows do not match the model's expansion");
  return (cross * solution.alpha).array() + solution.beta;
}

double primal_objective(const Eigen::MatrixXd& gram_ii, const Eigen::VectorXd& labels,
                        const Eigen::VectorXd& penalty, const Eigen::VectorXd& alpha, double beta) {
  const Eigen::VectorXd ka = gram_ii * alpha;
  double obj = alpha.dot(ka);
  for (Eigen::Index i = 0; i < labels.size(); ++i) obj += penalty(i) * std::max(0.0, 1.0 - labels(i) * (ka(i) + beta));
  return obj;
}

void dump_qp(const QpProblem& problem, const std::filesystem::path& path) {
  qp::DenseQp d = build_dense_qp(problem);
  apply_anchor_status(problem.status, problem.n_train, problem.n_anchor, problem.M2, d.lb, d.ub);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  auto matrix = [&](const char* name, const Eigen::MatrixXd& M) {
    std::size_t nnz = 0;
    for (Eigen::Index i = 0; i < M.rows(); ++i)
      for (Eigen::Index j = 0; j < M.cols(); ++j) nnz += M(i, j) != 0.0;
    out << "%%MatrixMarket matrix coordinate real general\n% " << name << "\n"
        << M.rows() << ' ' << M.cols() << ' ' << nnz << '\n';
    for (Eigen::Index j = 0; j < M.cols(); ++j)
      for (Eigen::Index i = 0; i < M.rows(); ++i)
        if (M(i, j) != 0.0) out << i + 1 << ' ' << j + 1 << ' ' << num(M(i, j)) << '\n';
  };
  auto vector = [&](const char* name, const Eigen::VectorXd& v) {
    out << "%%MatrixMarket matrix array real general\n% " << name << "\n" << v.size() << " 1\n";
    for (Eigen::Index i = 0; i < v.size(); ++i) out << (qp::is_inf(v(i)) ? (v(i) > 0 ? "inf" : "-inf") : num(v(i))) << '\n';
  };
  matrix("P", d.P);
  vector("q", d.q);
  matrix("A", d.A);
  vector("l", d.l);
  vector("u", d.u);
  vector("lb", d.lb);
  vector("ub", d.ub);
}

}  // namespace csvm
