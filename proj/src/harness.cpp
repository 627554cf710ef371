#include "csvm/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "csvm/baselines.hpp"
#include "csvm/csvm.hpp"
#include "csvm/qp.hpp"

namespace csvm {

std::string to_string(Method m) {
  switch (m) {
    case Method::svm: return "svm";
    case Method::weighted_svm: return "weighted_svm";
    case Method::sliding_beta: return "sliding_beta";
    case Method::csvm: return "csvm";
  }
  return "?";
}

Method parse_method(const std::string& text) {
  for (Method m : kAllMethods)
    if (to_string(m) == text) return m;
  throw std::invalid_argument("unknown method '" + text + "' (svm, weighted_svm, sliding_beta, csvm)");
}

std::string to_string(Selection s) { return s == Selection::accuracy ? "accuracy" : "gmean"; }

std::vector<double> GridSpec::powers_of_two(int lo, int hi, int step) {
  std::vector<double> v;
  for (int e = lo; e <= hi; e += step) v.push_back(std::ldexp(1.0, e));
  return v;
}

GridSpec GridSpec::full() {
  const auto axis = powers_of_two(-5, 5);
  return {axis, axis, axis, axis};
}

GridSpec GridSpec::small() {
  const auto axis = powers_of_two(-3, 3, 3);
  return {axis, axis, axis, axis};
}

void GridSpec::validate() const {
  auto check = [](const std::vector<double>& v, const char* name) {
    if (v.empty()) throw std::invalid_argument(std::string("grid axis ") + name + " is empty");
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!(v[i] > 0.0)) throw std::invalid_argument(std::string("grid axis ") + name + " must be positive");
      if (i > 0 && !(v[i] > v[i - 1])) throw std::invalid_argument(std::string("grid axis ") + name + " must ascend");
    }
  };
  check(C, "C");
  check(gamma, "gamma");
  check(c_plus, "C+");
  check(c_minus, "C-");
}

CvPlan CvPlan::for_dataset(const Dataset& data, std::uint64_t seed) {
  CvPlan p;
  p.outer_folds = p.inner_folds = data.size() > 1000 ? 5 : 10;
  const double pos = data.weight_of_label(1), neg = data.weight_of_label(-1);
  p.selection = std::min(pos, neg) < 0.3 * (pos + neg) ? Selection::gmean : Selection::accuracy;
  p.seed = seed;
  return p;
}

void CvPlan::validate() const {
  if (outer_folds < 2) throw std::invalid_argument("at least two outer folds are needed");
  if (inner_folds < 2) throw std::invalid_argument("at least two inner folds are needed");
}

void TargetConfig::validate() const {
  if (p0 && !(*p0 >= 0.0 && *p0 <= 1.0)) throw std::invalid_argument("p0 must lie in [0, 1]");
  if (!(delta >= 0.0 && delta <= 1.0)) throw std::invalid_argument("delta must lie in [0, 1]");
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
}

void HarnessConfig::validate() const {
  target.validate();
  if (methods.empty()) throw std::invalid_argument("no methods selected");
  if (!(M1 > 0.0) || !(M2 > 0.0)) throw std::invalid_argument("big-M constants must be positive");
  if (!(compress_fraction > 0.0 && compress_fraction <= 1.0))
    throw std::invalid_argument("compression fraction must lie in (0, 1]");
  if (workers == 0) throw std::invalid_argument("workers must be at least 1");
}

std::vector<std::vector<std::size_t>> stratified_folds(std::span<const int> labels, std::size_t k,
                                                       std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("stratified_folds: k must be at least 2");
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < labels.size(); ++i) (labels[i] > 0 ? pos : neg).push_back(i);
  if (pos.size() < k || neg.size() < k)
    throw DataError("dataset too small: some fold would miss a class (" + std::to_string(pos.size()) +
                    " positives, " + std::to_string(neg.size()) + " negatives, " + std::to_string(k) + " folds)");
  seeded_shuffle(pos, seed);
  seeded_shuffle(neg, seed ^ 0x5bd1e995ULL);
  std::vector<std::vector<std::size_t>> folds(k);
  std::size_t next = 0;
  for (auto i : pos) folds[next++ % k].push_back(i);
  for (auto i : neg) folds[next++ % k].push_back(i);
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

Eigen::VectorXd KernelModel::scores(const Eigen::MatrixXd& points) const {
  return (cross_gram(kernel, points, support) * alpha).array() + beta;
}

Stat summarize(std::span<const double> values) {
  Stat s;
  s.n = values.size();
  if (values.empty()) return s;
  for (double v : values) s.mean += v;
  s.mean /= static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return s;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

KernelSpec kernel_for(const HarnessConfig& config, double gamma) {
  return config.kernel == KernelSpec::Kind::linear ? KernelSpec::linear() : KernelSpec::rbf(gamma);
}

std::vector<double> gamma_axis(const HarnessConfig& config, const GridSpec& grid) {
  return config.kernel == KernelSpec::Kind::linear ? std::vector<double>{0.0} : grid.gamma;
}

std::vector<int> int_labels(const Dataset& d) {
  std::vector<int> y(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) y[i] = d[i].label;
  return y;
}

std::vector<std::size_t> complement(std::size_t n, const std::vector<std::size_t>& held_out) {
  std::vector<char> skip(n, 0);
  for (auto i : held_out) skip[i] = 1;
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < n; ++i)
    if (!skip[i]) out.push_back(i);
  return out;
}

Eigen::VectorXd take(const Eigen::VectorXd& v, std::span<const std::size_t> idx) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) out(static_cast<Eigen::Index>(k)) = v(static_cast<Eigen::Index>(idx[k]));
  return out;
}

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& m, std::span<const std::size_t> idx) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), m.cols());
  for (std::size_t k = 0; k < idx.size(); ++k) out.row(static_cast<Eigen::Index>(k)) = m.row(static_cast<Eigen::Index>(idx[k]));
  return out;
}

double weight_of(const Eigen::VectorXd& y, const Eigen::VectorXd& w, int label) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i)
    if ((y(i) > 0) == (label > 0)) s += w(i);
  return s;
}

// Data shared by every fit on one training set: points, labels, weights
// and the Gram matrix for the current gamma.
struct Pool {
  const Dataset* data;
  Eigen::MatrixXd X;
  Eigen::VectorXd y, w;
  KernelSpec kernel;
  GramMatrix gram;

  Pool(const Dataset& d, KernelSpec k)
      : data(&d), X(d.feature_matrix()), y(d.labels()), w(d.weights()), kernel(k), gram(csvm::gram(k, X)) {}

  KernelModel model(std::span<const std::size_t> idx, const Eigen::VectorXd& alpha, double beta) const {
    return {kernel, take_rows(X, idx), alpha, beta};
  }

  Eigen::VectorXd scores(std::span<const std::size_t> support, const Eigen::VectorXd& alpha, double beta,
                         std::span<const std::size_t> query) const {
    return (gram.block(query, support) * alpha).array() + beta;
  }
};

// The standard SVM takes C per instance; only the CSVM couples C to the
// class weights of I.
PenaltyConfig standard_penalty(double C) { return PenaltyConfig::independent(C, C); }

// Standard SVM on `idx`.
QpSolution pool_svm(const Pool& p, std::span<const std::size_t> idx, const PenaltyConfig& pen) {
  const Eigen::VectorXd y = take(p.y, idx), w = take(p.w, idx);
  const auto [cp, cm] = pen.resolve(weight_of(y, w, 1), weight_of(y, w, -1));
  return solve_standard_svm(p.gram.slice(idx), y, slack_penalties(y, w, cp, cm));
}

RateReport rates_on(const Eigen::VectorXd& scores, std::span<const int> labels, std::uint64_t seed) {
  std::vector<double> s(scores.data(), scores.data() + scores.size());
  return evaluate(s, labels, seed);
}

std::vector<int> labels_at(const Pool& p, std::span<const std::size_t> idx) {
  std::vector<int> out(idx.size());
  for (std::size_t k = 0; k < idx.size(); ++k) out[k] = p.y(static_cast<Eigen::Index>(idx[k])) > 0 ? 1 : -1;
  return out;
}

struct Constraint {
  std::vector<CountConstraint> counts;
  double p_star = 0.0;
  std::size_t scope = 0;
};

// Count rows for the primary rate and any extra rates; the reported
// threshold and scope are those of the primary rate.
Constraint make_constraint(const Eigen::VectorXd& anchor_labels, const TargetConfig& t, double p0) {
  Constraint c;
  c.scope = anchor_scope(t.rate, anchor_labels).size();
  if (!t.enabled) return c;
  std::vector<RateKind> rates{t.rate};
  for (RateKind r : t.extra_rates)
    if (std::find(rates.begin(), rates.end(), r) == rates.end()) rates.push_back(r);
  for (RateKind r : rates) {
    const std::size_t n = anchor_scope(r, anchor_labels).size();
    if (n == 0) continue;
    PerformanceTarget pt;
    pt.rate = r;
    pt.p0 = p0;
    pt.alpha = t.alpha;
    pt.delta = 0.0;  // p0 arrives uplifted
    const double p_star = hoeffding_threshold(pt, n);
    if (r == t.rate) c.p_star = p_star;
    c.counts.push_back(count_target(p_star, n, r));
  }
  return c;
}

struct Split {
  std::vector<std::size_t> order;  // I then J, indices into the pool
  std::size_t n_train = 0;
};

Split halves(const Pool& p, std::span<const std::size_t> idx, std::uint64_t seed) {
  const TrainSplit sp = split_half(*p.data, idx, seed);
  Split s;
  s.order = sp.train;
  s.order.insert(s.order.end(), sp.anchor.begin(), sp.anchor.end());
  s.n_train = sp.train.size();
  return s;
}

CsvmFit pool_csvm(const Pool& p, std::span<const std::size_t> idx, double C, double p0, const HarnessConfig& cfg,
                  double time_limit, std::uint64_t seed) {
  const Split sp = halves(p, idx, seed);
  const Eigen::VectorXd y = take(p.y, sp.order), w = take(p.w, sp.order);
  const auto nI = static_cast<Eigen::Index>(sp.n_train);
  const Eigen::VectorXd wI = w.head(nI);
  const Eigen::VectorXd yI = y.head(nI);
  const double pos_i = weight_of(yI, wI, 1), neg_i = weight_of(yI, wI, -1);
  const Constraint con = make_constraint(y.tail(y.size() - nI), cfg.target, p0);

  const Eigen::MatrixXd G = p.gram.slice(sp.order);
  CsvmProblem prob = make_csvm_problem(G, y, wI, sp.n_train, C / pos_i, C / neg_i, con.counts, p.kernel, cfg.M1,
                                       cfg.M2);
  prob.time_limit = time_limit;
  prob.node_limit = cfg.node_limit;

  const QpSolution svm = solve_standard_svm(G, y, slack_penalties(y, w, C / pos_i, C / neg_i));
  const WarmStart ws = warm_start_from_svm(svm, prob);
  const CsvmModel m = solve_csvm(prob, ws.model ? &*ws.model : nullptr);

  CsvmFit fit;
  fit.status = to_string(m.status);
  fit.objective = m.objective;
  fit.gap = m.gap;
  fit.nodes = m.nodes;
  fit.p_star = con.p_star;
  fit.scope = con.scope;
  fit.required = con.counts.empty() || con.counts.front().rate != cfg.target.rate ? 0 : con.counts.front().required;
  fit.n_train = sp.n_train;
  fit.n_anchor = sp.order.size() - sp.n_train;
  fit.message = m.message;
  if (!ws.note.empty()) fit.message += (fit.message.empty() ? "" : "; ") + ws.note;
  if (m.status == SolveStatus::infeasible) {
    const FeasibilityReport d = diagnose_feasibility(prob);
    fit.diagnosis = d.summary;
    for (const auto& e : d.entries) fit.diagnosis += "; " + to_string(e.rate) + ": " + e.verdict;
  }
  if (m.status != SolveStatus::proven_optimal && m.status != SolveStatus::incumbent_at_timeout) return fit;
  fit.has_model = true;
  fit.z = m.z;
  for (auto j : anchor_scope(cfg.target.rate, y.tail(y.size() - nI))) fit.achieved += m.z[j] == 1;
  fit.passes_check = check_model(prob, m).empty();
  fit.model = p.model(sp.order, m.solution.alpha, m.solution.beta);
  return fit;
}

// Model of a fit or the reason there is none.
const KernelModel& fitted(const CsvmFit& fit) {
  if (!fit.has_model)
    throw std::runtime_error("CSVM " + fit.status + (fit.message.empty() ? "" : ": " + fit.message));
  return fit.model;
}

struct Sliding {
  KernelModel model;
  double p_star = 0.0;
};

Sliding pool_sliding(const Pool& p, std::span<const std::size_t> idx, double C, double p0, const HarnessConfig& cfg,
                     std::uint64_t seed) {
  const Split sp = halves(p, idx, seed);
  const QpSolution svm = pool_svm(p, sp.order, standard_penalty(C));
  const std::span<const std::size_t> anchors(sp.order.data() + sp.n_train, sp.order.size() - sp.n_train);
  const Eigen::VectorXd yj = take(p.y, anchors);
  const Constraint con = make_constraint(yj, cfg.target, p0);
  Sliding s;
  s.p_star = con.p_star;
  double shift = 0.0;
  if (!con.counts.empty()) {
    const Eigen::VectorXd f = p.scores(sp.order, svm.alpha, svm.beta, anchors);
    const std::vector<double> fs(f.data(), f.data() + f.size());
    shift = slide_beta(svm, fs, labels_at(p, anchors), con.counts).beta_shift;
  }
  s.model = p.model(sp.order, svm.alpha, svm.beta + shift);
  return s;
}

double selection_score(const RateReport& r, Selection s) { return s == Selection::accuracy ? r.acc : r.gmean; }

void log(const HarnessConfig& cfg, const char* fmt, auto... args) {
  if (!cfg.verbose) return;
  static std::mutex mu;
  std::lock_guard lock(mu);
  std::fprintf(stderr, fmt, args...);
  std::fputc('\n', stderr);
}

}  // namespace

TuneResult tune_grid(const Dataset& train, const GridSpec& grid, Method method, const FitContext& ctx) {
  grid.validate();
  const HarnessConfig& cfg = *ctx.config;
  const auto labels = int_labels(train);
  const auto folds = stratified_folds(labels, ctx.inner_folds, ctx.seed);

  TuneResult best;
  double best_score = -std::numeric_limits<double>::infinity();
  bool any = false;
  for (double gamma : gamma_axis(cfg, grid)) {
    const Pool pool(train, kernel_for(cfg, gamma));
    std::vector<Candidate> cands;
    if (method == Method::weighted_svm) {
      for (double cp : grid.c_plus)
        for (double cm : grid.c_minus) cands.push_back({0.0, gamma, cp, cm});
    } else {
      for (double C : grid.C) cands.push_back({C, gamma, 0.0, 0.0});
    }
    for (const Candidate& cand : cands) {
      ++best.evaluated;
      RateReport mean;
      mean.tpr = mean.tnr = mean.acc = mean.gmean = 0.0;
      bool failed = false;
      for (std::size_t f = 0; f < folds.size() && !failed; ++f) {
        const auto tr = complement(train.size(), folds[f]);
        const auto& va = folds[f];
        const std::uint64_t fold_seed = ctx.seed * 1000003ULL + f;
        try {
          Eigen::VectorXd s;
          if (method == Method::csvm) {
            const CsvmFit fit = pool_csvm(pool, tr, cand.C, ctx.p0, cfg, cfg.inner_time_limit, fold_seed);
            s = fitted(fit).scores(take_rows(pool.X, va));
          } else {
            const PenaltyConfig pen = method == Method::weighted_svm
                                          ? PenaltyConfig::independent(cand.c_plus, cand.c_minus)
                                          : standard_penalty(cand.C);
            const QpSolution sol = pool_svm(pool, tr, pen);
            s = pool.scores(tr, sol.alpha, sol.beta, va);
          }
          const RateReport r = rates_on(s, labels_at(pool, va), fold_seed);
          mean.tpr += r.tpr;
          mean.tnr += r.tnr;
          mean.acc += r.acc;
          mean.gmean += r.gmean;
        } catch (const std::exception& e) {
          log(cfg, "  candidate C=%g C+=%g C-=%g gamma=%g failed: %s", cand.C, cand.c_plus, cand.c_minus, gamma,
              e.what());
          failed = true;
        }
      }
      if (failed) {
        ++best.failed;
        continue;
      }
      const double k = static_cast<double>(folds.size());
      mean.tpr /= k;
      mean.tnr /= k;
      mean.acc /= k;
      mean.gmean /= k;
      const double score = selection_score(mean, ctx.selection);
      if (score >= best_score) {
        best_score = score;
        best.best = cand;
        best.score = score;
        best.mean_rates = mean;
        any = true;
      }
    }
  }
  if (!any) throw std::runtime_error("every grid candidate failed to train");
  return best;
}

CsvmFit fit_csvm(const Dataset& train, double C, double gamma, double p0, const HarnessConfig& config,
                 double time_limit, std::uint64_t seed) {
  const Pool pool(train, kernel_for(config, gamma));
  std::vector<std::size_t> all(train.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return pool_csvm(pool, all, C, p0, config, time_limit, seed);
}

std::map<Method, MethodSummary> aggregate(std::span<const FoldReport> folds) {
  if (folds.size() < 2) throw std::invalid_argument("aggregate needs at least two folds");
  std::map<Method, MethodSummary> out;
  std::map<Method, std::vector<double>> tpr, tnr, acc, gm, tg;
  for (const auto& f : folds) {
    for (const auto& [m, mf] : f.methods) {
      auto& s = out[m];
      if (!mf.ok) {
        ++s.failed_folds;
        continue;
      }
      tpr[m].push_back(mf.validation.tpr);
      tnr[m].push_back(mf.validation.tnr);
      acc[m].push_back(mf.validation.acc);
      gm[m].push_back(mf.validation.gmean);
      tg[m].push_back(mf.target);
    }
  }
  for (auto& [m, s] : out) {
    s.tpr = summarize(tpr[m]);
    s.tnr = summarize(tnr[m]);
    s.acc = summarize(acc[m]);
    s.gmean = summarize(gm[m]);
    s.target = summarize(tg[m]);
  }
  return out;
}

namespace {

FoldReport run_fold(const Dataset& data, const std::vector<std::size_t>& valid_idx, std::size_t fold,
                    const CvPlan& plan, const GridSpec& grid, const HarnessConfig& cfg,
                    const std::optional<Standardization>& global) {
  FoldReport rep;
  rep.fold = fold;
  const auto train_idx = complement(data.size(), valid_idx);
  rep.n_train = train_idx.size();
  rep.n_validation = valid_idx.size();
  const std::uint64_t fold_seed = plan.seed * 7919ULL + fold;

  auto audit = [&](std::string_view stage, std::span<const std::size_t> rows) {
    if (cfg.audit) cfg.audit(fold, stage, rows);
  };

  // Standardization is fitted on the outer training rows only.
  std::vector<std::size_t> all_rows;
  Standardization st;
  if (global) {
    all_rows.resize(data.size());
    for (std::size_t i = 0; i < all_rows.size(); ++i) all_rows[i] = i;
    audit("standardize", all_rows);
    st = *global;
  } else {
    audit("standardize", train_idx);
    st = fit_standardization(data.subset(train_idx));
  }
  Dataset train = apply_standardization(data.subset(train_idx), st);
  const Dataset valid = apply_standardization(data.subset(valid_idx), st);
  if (data.size() > cfg.compress_threshold) {
    audit("compress", train_idx);
    train = compress_kmeans(train, cfg.compress_fraction, fold_seed);
    rep.compressed = true;
  }
  audit("tune", train_idx);
  audit("train", train_idx);
  const auto valid_labels = int_labels(valid);
  const Eigen::MatrixXd valid_X = valid.feature_matrix();

  FitContext ctx;
  ctx.config = &cfg;
  ctx.selection = plan.selection;
  ctx.inner_folds = plan.inner_folds;
  ctx.seed = fold_seed;

  auto wants = [&](Method m) { return std::find(cfg.methods.begin(), cfg.methods.end(), m) != cfg.methods.end(); };
  const bool need_svm = wants(Method::svm) || wants(Method::sliding_beta) || wants(Method::csvm);

  std::optional<TuneResult> svm_tune;
  std::string svm_error;
  if (need_svm) {
    const auto t0 = Clock::now();
    try {
      svm_tune = tune_grid(train, grid, Method::svm, ctx);
      rep.rate0 = svm_tune->mean_rates.rate(cfg.target.rate);
    } catch (const std::exception& e) {
      svm_error = e.what();
    }
    log(cfg, "fold %zu: svm tuned in %.1fs", fold, seconds_since(t0));
  }
  rep.p0 = std::min(1.0, cfg.target.p0.value_or(rep.rate0) + cfg.target.delta);
  ctx.p0 = rep.p0;

  for (Method m : cfg.methods) {
    MethodFold mf;
    const auto t0 = Clock::now();
    try {
      KernelModel model;
      if (m != Method::weighted_svm && !svm_tune) throw std::runtime_error("SVM tuning failed: " + svm_error);
      switch (m) {
        case Method::svm: {
          mf.params = svm_tune->best;
          const Pool pool(train, kernel_for(cfg, mf.params.gamma));
          std::vector<std::size_t> all(train.size());
          for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
          const QpSolution sol = pool_svm(pool, all, standard_penalty(mf.params.C));
          model = pool.model(all, sol.alpha, sol.beta);
          break;
        }
        case Method::weighted_svm: {
          mf.params = tune_grid(train, grid, Method::weighted_svm, ctx).best;
          const Pool pool(train, kernel_for(cfg, mf.params.gamma));
          std::vector<std::size_t> all(train.size());
          for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
          const QpSolution sol =
              pool_svm(pool, all, PenaltyConfig::independent(mf.params.c_plus, mf.params.c_minus));
          model = pool.model(all, sol.alpha, sol.beta);
          break;
        }
        case Method::sliding_beta: {
          mf.params = svm_tune->best;
          const Pool pool(train, kernel_for(cfg, mf.params.gamma));
          std::vector<std::size_t> all(train.size());
          for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
          Sliding s = pool_sliding(pool, all, mf.params.C, rep.p0, cfg, fold_seed);
          mf.target = rep.p0;
          mf.p_star = s.p_star;
          model = std::move(s.model);
          break;
        }
        case Method::csvm: {
          mf.params = cfg.tune_csvm ? tune_grid(train, grid, Method::csvm, ctx).best : svm_tune->best;
          CsvmFit fit = fit_csvm(train, mf.params.C, mf.params.gamma, rep.p0, cfg, cfg.time_limit, fold_seed);
          mf.target = rep.p0;
          mf.p_star = fit.p_star;
          model = fitted(fit);
          mf.csvm = std::move(fit);
          break;
        }
      }
      mf.validation = rates_on(model.scores(valid_X), valid_labels, fold_seed);
      mf.ok = true;
    } catch (const std::exception& e) {
      mf.error = e.what();
    }
    mf.seconds = seconds_since(t0);
    if (mf.ok)
      log(cfg, "fold %zu: %s done in %.1fs (TPR %.3f TNR %.3f)", fold, to_string(m).c_str(), mf.seconds,
          mf.validation.tpr, mf.validation.tnr);
    else
      log(cfg, "fold %zu: %s failed in %.1fs: %s", fold, to_string(m).c_str(), mf.seconds, mf.error.c_str());
    rep.methods[m] = std::move(mf);
  }
  return rep;
}

}  // namespace

CvReport run_algorithm1(const Dataset& data, const CvPlan& plan, const GridSpec& grid, const HarnessConfig& config) {
  plan.validate();
  grid.validate();
  config.validate();
  const auto t0 = Clock::now();
  CvReport report;
  report.plan = plan;
  report.grid = grid;
  report.config = config;

  const auto labels = int_labels(data);
  const auto folds = stratified_folds(labels, plan.outer_folds, plan.seed);
  std::optional<Standardization> global;
  if (config.global_standardize) {
    global = fit_standardization(data);
    report.notes.push_back("standardization fitted on the whole dataset (validation rows included)");
  }
  if (data.size() > config.compress_threshold)
    report.notes.push_back("training folds compressed by per-class k-means, fraction " +
                           std::to_string(config.compress_fraction));

  report.folds.resize(folds.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t f = next++; f < folds.size(); f = next++)
      report.folds[f] = run_fold(data, folds[f], f, plan, grid, config, global);
  };
  const std::size_t n_threads = std::min(config.workers, folds.size());
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  report.summary = aggregate(report.folds);
  report.wall_seconds = seconds_since(t0);
  return report;
}

}  // namespace csvm
