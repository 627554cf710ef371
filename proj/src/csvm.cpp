#include "csvm/csvm.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <memory>
#include <queue>
#include <set>
#include <sstream>
#include <stdexcept>

#include "csvm/baselines.hpp"

namespace csvm {

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::proven_optimal: return "proven_optimal";
    case SolveStatus::incumbent_at_timeout: return "incumbent_at_timeout";
    case SolveStatus::infeasible: return "infeasible";
    case SolveStatus::no_incumbent: return "no_incumbent";
  }
  return "?";
}

void CsvmProblem::validate() const {
  qp.validate();
  if (qp.counts.size() != constraints.size())
    throw std::invalid_argument("CsvmProblem: one count scope per constraint expected");
  if (!(integrality_tol > 0.0 && integrality_tol < 0.5)) throw std::invalid_argument("CsvmProblem: bad integrality tol");
  if (!(node_tol > 0.0)) throw std::invalid_argument("CsvmProblem: node tol must be positive");
}

std::vector<std::size_t> anchor_scope(RateKind rate, const Eigen::VectorXd& anchor_labels) {
  std::vector<std::size_t> scope;
  for (Eigen::Index j = 0; j < anchor_labels.size(); ++j)
    if (rate == RateKind::acc || (rate == RateKind::tpr) == (anchor_labels(j) > 0))
      scope.push_back(static_cast<std::size_t>(j));
  return scope;
}

CsvmProblem make_csvm_problem(const Eigen::MatrixXd& gram, const Eigen::VectorXd& labels,
                              const Eigen::VectorXd& weights, std::size_t n_train, double c_plus, double c_minus,
                              std::span<const CountConstraint> constraints, const KernelSpec& kernel, double M1,
                              double M2) {
  CsvmProblem p;
  p.kernel = kernel;
  p.qp.gram = gram;
  p.qp.labels = labels;
  p.qp.n_train = n_train;
  p.qp.n_anchor = static_cast<std::size_t>(labels.size()) - n_train;
  const auto nI = static_cast<Eigen::Index>(n_train);
  p.qp.penalty = slack_penalties(labels.head(nI), weights, c_plus, c_minus);
  p.qp.M1 = M1;
  p.qp.M2 = M2;
  const Eigen::VectorXd yj = labels.tail(labels.size() - nI);
  for (const auto& c : constraints) {
    AnchorCount ac{anchor_scope(c.rate, yj), c.required};
    if (ac.scope.size() != c.scope_size)
      throw std::invalid_argument("make_csvm_problem: constraint scope does not match the anchor set");
    p.qp.counts.push_back(std::move(ac));
    p.constraints.push_back(c);
  }
  p.validate();
  return p;
}

namespace {

using Clock = std::chrono::steady_clock;

Eigen::VectorXd anchor_margins(const QpProblem& qp, const Eigen::VectorXd& alpha, double beta) {
  const auto nJ = static_cast<Eigen::Index>(qp.n_anchor);
  const Eigen::VectorXd f = (qp.gram.bottomRows(nJ) * alpha).array() + beta;
  return qp.labels.tail(nJ).cwiseProduct(f);
}

/// Fixes anchors forced by capacity; false when some count cannot be met.
bool propagate(std::vector<AnchorStatus>& st, const std::vector<AnchorCount>& counts) {
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& c : counts) {
      std::size_t ones = 0, open = 0;
      for (auto j : c.scope) {
        if (st[j] == AnchorStatus::fixed_one) ++ones;
        else if (st[j] == AnchorStatus::relaxed) ++open;
      }
      if (ones + open < c.required) return false;
      if (ones < c.required && ones + open == c.required) {
        for (auto j : c.scope)
          if (st[j] == AnchorStatus::relaxed) st[j] = AnchorStatus::fixed_one;
        changed = true;
      }
    }
  }
  return true;
}

bool counts_hold(const std::vector<int>& z, const std::vector<AnchorCount>& counts) {
  for (const auto& c : counts) {
    std::size_t s = 0;
    for (auto j : c.scope) s += z[j] == 1;
    if (s < c.required) return false;
  }
  return true;
}

struct Node {
  double bound;
  std::size_t depth;
  std::size_t seq;
  std::vector<AnchorStatus> status;
  std::shared_ptr<const QpSolution> sol;
};

struct WorseNode {
  bool operator()(const Node& a, const Node& b) const {
    if (a.bound != b.bound) return a.bound > b.bound;
    if (a.depth != b.depth) return a.depth < b.depth;
    return a.seq > b.seq;
  }
};

class BranchAndBound {
 public:
  explicit BranchAndBound(const CsvmProblem& p)
      : pb_(p), node_qp_(p.qp, settings(p)), start_(Clock::now()) {
    if (p.time_limit > 0.0)
      deadline_ = start_ + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(p.time_limit));
    node_qp_.settings().deadline = deadline_;
  }

  CsvmModel run(const CsvmModel* warm);

 private:
  static qp::QpSettings settings(const CsvmProblem& p) {
    qp::QpSettings s;
    s.kkt_tol = p.node_tol;
    return s;
  }
  double elapsed() const { return std::chrono::duration<double>(Clock::now() - start_).count(); }
  bool out_of_time() const { return deadline_ && Clock::now() >= *deadline_; }
  bool out_of_nodes() const { return pb_.node_limit > 0 && nodes_ >= pb_.node_limit; }
  double incumbent_value() const { return best_ ? best_->objective : std::numeric_limits<double>::infinity(); }

  bool offer(const std::vector<int>& z, const qp::QpResult* warm);
  void heuristic(const std::vector<AnchorStatus>& st, const QpSolution& s);
  bool integral(const std::vector<AnchorStatus>& st, const QpSolution& s, std::vector<int>& z) const;
  std::optional<std::size_t> branch_variable(const std::vector<AnchorStatus>& st, const QpSolution& s) const;
  void log(const Node& n) const;

  const CsvmProblem& pb_;
  NodeQp node_qp_;
  Clock::time_point start_;
  std::optional<Clock::time_point> deadline_;
  std::optional<CsvmModel> best_;
  std::set<std::vector<int>> tried_;
  std::vector<std::pair<double, double>> history_;
  std::size_t nodes_ = 0;
  bool timed_out_ = false;
};

bool BranchAndBound::offer(const std::vector<int>& z, const qp::QpResult* warm) {
  if (!counts_hold(z, pb_.qp.counts)) return false;
  if (!tried_.insert(z).second) return false;
  std::vector<AnchorStatus> st(z.size());
  for (std::size_t j = 0; j < z.size(); ++j) st[j] = z[j] ? AnchorStatus::fixed_one : AnchorStatus::fixed_zero;
  QpSolution s = node_qp_.solve(st, warm);
  if (s.status != QpStatus::optimal) return false;
  CsvmModel m;
  m.solution = std::move(s);
  m.z = z;
  m.objective = m.solution.objective;
  if (!check_model(pb_, m).empty()) return false;
  if (m.objective >= incumbent_value()) return false;
  history_.emplace_back(elapsed(), m.objective);
  best_ = std::move(m);
  return true;
}

void BranchAndBound::heuristic(const std::vector<AnchorStatus>& st, const QpSolution& s) {
  const Eigen::VectorXd margin = anchor_margins(pb_.qp, s.alpha, s.beta);
  std::vector<int> z(st.size());
  for (std::size_t j = 0; j < st.size(); ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    z[j] = st[j] == AnchorStatus::fixed_one || (st[j] == AnchorStatus::relaxed && margin(jj) >= 1.0 - 1e-9);
  }
  // Fill count deficits with the relaxed anchors closest to their margin.
  for (const auto& c : pb_.qp.counts) {
    std::size_t have = 0;
    std::vector<std::size_t> cand;
    for (auto j : c.scope) {
      have += z[j];
      if (!z[j] && st[j] == AnchorStatus::relaxed) cand.push_back(j);
    }
    std::stable_sort(cand.begin(), cand.end(), [&](std::size_t a, std::size_t b) {
      return margin(static_cast<Eigen::Index>(a)) > margin(static_cast<Eigen::Index>(b));
    });
    for (std::size_t k = 0; have < c.required && k < cand.size(); ++k, ++have) z[cand[k]] = 1;
  }
  offer(z, &s.raw);
}

bool BranchAndBound::integral(const std::vector<AnchorStatus>& st, const QpSolution& s, std::vector<int>& z) const {
  z.assign(st.size(), 0);
  for (std::size_t j = 0; j < st.size(); ++j) {
    const double v = s.z(static_cast<Eigen::Index>(j));
    if (st[j] == AnchorStatus::fixed_one) z[j] = 1;
    else if (st[j] == AnchorStatus::fixed_zero) z[j] = 0;
    else if (v <= pb_.integrality_tol) z[j] = 0;
    else if (v >= 1.0 - pb_.integrality_tol) z[j] = 1;
    else return false;
  }
  return true;
}

std::optional<std::size_t> BranchAndBound::branch_variable(const std::vector<AnchorStatus>& st,
                                                           const QpSolution& s) const {
  std::optional<std::size_t> pick;
  double best_dist = 2.0, best_mu = -1.0;
  for (std::size_t j = 0; j < st.size(); ++j) {
    if (st[j] != AnchorStatus::relaxed) continue;
    const auto jj = static_cast<Eigen::Index>(j);
    const double dist = std::abs(s.z(jj) - 0.5);
    const double mu = s.mu(jj);
    if (dist < best_dist || (dist == best_dist && mu > best_mu)) {
      pick = j;
      best_dist = dist;
      best_mu = mu;
    }
  }
  return pick;
}

void BranchAndBound::log(const Node& n) const {
  if (!pb_.verbose) return;
  const double inc = incumbent_value();
  const double gap = std::isfinite(inc) ? std::max(0.0, (inc - n.bound) / std::max(1.0, std::abs(inc))) : INFINITY;
  std::fprintf(stderr, "node %zu depth %zu bound %.10g incumbent %.10g gap %.3g\n", nodes_, n.depth, n.bound, inc, gap);
}

CsvmModel BranchAndBound::run(const CsvmModel* warm) {
  const std::size_t nJ = pb_.qp.n_anchor;
  if (warm && warm->z.size() == nJ) offer(warm->z, warm->solution.raw.x.size() ? &warm->solution.raw : nullptr);

  bool all_zero_ok = true;
  for (const auto& c : pb_.qp.counts) all_zero_ok &= c.required == 0;
  if (all_zero_ok) offer(std::vector<int>(nJ, 0), nullptr);

  std::priority_queue<Node, std::vector<Node>, WorseNode> open;
  std::size_t seq = 0;
  bool exhausted = false;

  std::vector<AnchorStatus> root(nJ, AnchorStatus::relaxed);
  if (propagate(root, pb_.qp.counts)) {
    const qp::QpResult* w = best_ ? &best_->solution.raw : nullptr;
    auto sol = std::make_shared<QpSolution>(node_qp_.solve(root, w));
    ++nodes_;
    if (sol->status == QpStatus::max_iter && out_of_time()) {
      timed_out_ = true;
    } else if (sol->status != QpStatus::infeasible) {
      Node n{sol->objective, 0, seq++, root, sol};
      log(n);
      heuristic(root, *sol);
      open.push(std::move(n));
    }
  }

  while (!open.empty()) {
    if (out_of_time() || out_of_nodes()) {
      timed_out_ = true;
      break;
    }
    Node n = open.top();
    open.pop();
    if (n.bound >= incumbent_value() - 1e-9) continue;

    std::vector<int> z;
    if (integral(n.status, *n.sol, z)) {
      offer(z, &n.sol->raw);
      // Rounding may lose a little; keep splitting while the leaf is worse
      // than the node bound by more than the pruning slack.
      if (n.bound >= incumbent_value() - 1e-9) continue;
    }
    const auto j = branch_variable(n.status, *n.sol);
    if (!j) continue;

    for (AnchorStatus side : {AnchorStatus::fixed_one, AnchorStatus::fixed_zero}) {
      std::vector<AnchorStatus> st = n.status;
      st[*j] = side;
      if (!propagate(st, pb_.qp.counts)) continue;
      auto sol = std::make_shared<QpSolution>(node_qp_.solve(st, &n.sol->raw));
      ++nodes_;
      if (sol->status == QpStatus::max_iter && out_of_time()) {
        timed_out_ = true;
        break;
      }
      if (sol->status == QpStatus::infeasible) continue;
      Node child{std::max(sol->objective, n.bound), n.depth + 1, seq++, std::move(st), sol};
      log(child);
      if (child.bound >= incumbent_value() - 1e-9) continue;
      if (nodes_ % 20 == 0) heuristic(child.status, *sol);
      open.push(std::move(child));
    }
    if (timed_out_) break;
  }
  exhausted = open.empty() && !timed_out_;

  CsvmModel out;
  if (best_) out = *best_;
  out.nodes = nodes_;
  out.incumbent_history = history_;
  out.wall_seconds = elapsed();
  if (exhausted) {
    out.status = best_ ? SolveStatus::proven_optimal : SolveStatus::infeasible;
    out.gap = 0.0;
  } else {
    out.status = best_ ? SolveStatus::incumbent_at_timeout : SolveStatus::no_incumbent;
    double lb = open.empty() ? incumbent_value() : open.top().bound;
    out.gap = best_ ? std::max(0.0, (out.objective - lb) / std::max(1.0, std::abs(out.objective))) : INFINITY;
  }
  return out;
}

std::string describe(const CountConstraint& c) {
  std::ostringstream s;
  s << to_string(c.rate) << " >= " << c.required << "/" << c.scope_size;
  return s.str();
}

// Which constraints are infeasible on their own at the root (after count
// propagation), or else which set is jointly infeasible.
std::string explain_infeasible(const CsvmProblem& pb) {
  std::vector<std::string> alone;
  for (std::size_t k = 0; k < pb.constraints.size(); ++k) {
    QpProblem single = pb.qp;
    single.counts = {pb.qp.counts[k]};
    std::vector<AnchorStatus> st(single.n_anchor, AnchorStatus::relaxed);
    bool bad = !propagate(st, single.counts);
    if (!bad) {
      single.status = st;
      bad = solve_qp(single, nullptr, pb.node_tol).status == QpStatus::infeasible;
    }
    if (bad) alone.push_back(describe(pb.constraints[k]));
  }
  std::string msg = "infeasible: ";
  if (!alone.empty()) {
    for (std::size_t i = 0; i < alone.size(); ++i) msg += (i ? ", " : "") + alone[i];
    msg += alone.size() == 1 ? " cannot be met" : " cannot be met individually";
  } else if (pb.constraints.empty()) {
    msg += "the margin system has no solution";
  } else {
    for (std::size_t i = 0; i < pb.constraints.size(); ++i) msg += (i ? " and " : "") + describe(pb.constraints[i]);
    msg += " cannot be met together";
  }
  return msg;
}

}  // namespace

std::string check_model(const CsvmProblem& problem, const CsvmModel& model, double tol) {
  const auto& qp = problem.qp;
  if (model.z.size() != qp.n_anchor) return "z has the wrong length";
  for (int v : model.z)
    if (v != 0 && v != 1) return "z is not binary";
  for (std::size_t k = 0; k < qp.counts.size(); ++k) {
    std::size_t s = 0;
    for (auto j : qp.counts[k].scope) s += model.z[j] == 1;
    if (s < qp.counts[k].required) {
      std::ostringstream m;
      m << "count constraint " << k << " holds " << s << " < " << qp.counts[k].required;
      return m.str();
    }
  }
  if (model.solution.alpha.size() != static_cast<Eigen::Index>(qp.size())) return "coefficients have the wrong length";
  const Eigen::VectorXd margin = anchor_margins(qp, model.solution.alpha, model.solution.beta);
  for (std::size_t j = 0; j < qp.n_anchor; ++j) {
    const double mj = margin(static_cast<Eigen::Index>(j));
    if (model.z[j] == 1 && !(mj >= 1.0 - tol)) {
      std::ostringstream m;
      m.precision(17);
      m << "anchor " << j << " has z = 1 but margin " << mj;
      return m.str();
    }
  }
  return {};
}

WarmStart warm_start_from_svm(const QpSolution& svm, const CsvmProblem& problem) {
  const auto& qp = problem.qp;
  const auto nI = static_cast<Eigen::Index>(qp.n_train), nJ = static_cast<Eigen::Index>(qp.n_anchor);
  if (svm.alpha.size() != nI + nJ) throw std::invalid_argument("warm_start_from_svm: SVM must cover I and J");
  WarmStart w;
  const Eigen::VectorXd fj = (qp.gram.bottomRows(nJ) * svm.alpha).array() + svm.beta;
  std::vector<double> scores(fj.data(), fj.data() + nJ);
  std::vector<int> labels(static_cast<std::size_t>(nJ));
  for (Eigen::Index j = 0; j < nJ; ++j) labels[static_cast<std::size_t>(j)] = qp.labels(nI + j) > 0 ? 1 : -1;
  try {
    w.beta_shift = minimal_shift(scores, labels, problem.constraints);
  } catch (const SlideError& e) {
    w.note = std::string("warm start unavailable: ") + e.what();
    return w;
  }
  std::vector<int> z(static_cast<std::size_t>(nJ));
  for (std::size_t j = 0; j < z.size(); ++j) z[j] = labels[j] * (scores[j] + w.beta_shift) > 0.0;

  NodeQp node(qp, [&] {
    qp::QpSettings s;
    s.kkt_tol = problem.node_tol;
    return s;
  }());
  const auto& d = node.dense();
  qp::QpResult guess;
  guess.x = Eigen::VectorXd::Zero(d.num_vars());
  for (Eigen::Index i = 0; i < nI; ++i) guess.x(i) = std::clamp(svm.lambda(i), 0.0, d.ub(i));
  for (Eigen::Index j = 0; j < nJ; ++j)
    guess.x(nI + j) = std::clamp(svm.lambda(nI + j), 0.0, qp.M2 * z[static_cast<std::size_t>(j)]);
  guess.x(node.beta_index()) = svm.beta + w.beta_shift;
  const Eigen::VectorXd fi = (qp.gram.topRows(nI) * svm.alpha).array() + svm.beta + w.beta_shift;
  for (Eigen::Index i = 0; i < nI; ++i)
    guess.x(node.xi_offset() + i) = std::max(0.0, 1.0 - qp.labels(i) * fi(i));
  for (Eigen::Index j = 0; j < nJ; ++j) guess.x(node.z_offset() + j) = z[static_cast<std::size_t>(j)];

  std::vector<AnchorStatus> st(z.size());
  for (std::size_t j = 0; j < z.size(); ++j) st[j] = z[j] ? AnchorStatus::fixed_one : AnchorStatus::fixed_zero;
  CsvmModel m;
  m.solution = node.solve(st, &guess);
  if (m.solution.status != QpStatus::optimal) {
    w.note = "warm start unavailable: node QP with the slid z is " + qp::to_string(m.solution.status);
    return w;
  }
  m.z = z;
  m.objective = m.solution.objective;
  m.status = SolveStatus::incumbent_at_timeout;
  if (const auto bad = check_model(problem, m); !bad.empty()) {
    w.note = "warm start unavailable: " + bad;
    return w;
  }
  w.model = std::move(m);
  return w;
}

CsvmModel solve_csvm(const CsvmProblem& problem, const CsvmModel* warm) {
  problem.validate();
  BranchAndBound bnb(problem);
  CsvmModel m = bnb.run(warm);
  if (m.status == SolveStatus::infeasible) m.message = explain_infeasible(problem);
  return m;
}

FeasibilityReport diagnose_feasibility(const CsvmProblem& problem) {
  FeasibilityReport r;
  bool tpr = false, tnr = false, acc = false;
  for (const auto& c : problem.constraints) {
    tpr |= c.rate == RateKind::tpr;
    tnr |= c.rate == RateKind::tnr;
    acc |= c.rate == RateKind::acc;
  }
  const bool one_sided = !acc && !(tpr && tnr);
  const bool rbf = problem.kernel.kind == KernelSpec::Kind::rbf;
  const std::string verdict = one_sided ? "feasible by intercept shift"
                              : rbf     ? "feasible (separating kernel)"
                                        : "possibly infeasible";
  for (const auto& c : problem.constraints) r.entries.push_back({c.rate, verdict});
  r.summary = problem.constraints.empty() ? "feasible (no constraints)" : verdict;
  return r;
}

}  // namespace csvm
