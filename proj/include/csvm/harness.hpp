#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "csvm/dataset.hpp"
#include "csvm/kernel.hpp"
#include "csvm/metrics.hpp"

namespace csvm {

enum class Method { svm, weighted_svm, sliding_beta, csvm };
std::string to_string(Method m);
Method parse_method(const std::string& text);
inline constexpr Method kAllMethods[] = {Method::svm, Method::weighted_svm, Method::sliding_beta, Method::csvm};

/// Hyperparameter grid. Candidates are visited with gamma outer and C
/// inner, both ascending.
struct GridSpec {
  std::vector<double> C;
  std::vector<double> gamma;
  std::vector<double> c_plus, c_minus;  // weighted baseline only

  /// 2^(-5..5) on every axis.
  static GridSpec full();
  /// 2^{-3,0,3} on every axis.
  static GridSpec small();
  static std::vector<double> powers_of_two(int lo, int hi, int step = 1);
  void validate() const;
};

enum class Selection { accuracy, gmean };
std::string to_string(Selection s);

struct CvPlan {
  std::size_t outer_folds = 10;
  std::size_t inner_folds = 10;
  Selection selection = Selection::accuracy;
  std::uint64_t seed = 1;

  /// 10 folds, or 5 above 1000 instances; G-mean when the minority class
  /// holds under 30% of the total weight.
  static CvPlan for_dataset(const Dataset& data, std::uint64_t seed = 1);
  void validate() const;
};

/// How the performance target is set. With `p0` present it is used as
/// given (plus `delta`); otherwise p0 is the tuned SVM's inner-CV estimate
/// of the rate, the estimate then uplifted by `delta`.
struct TargetConfig {
  RateKind rate = RateKind::tpr;
  std::optional<double> p0;
  double delta = 0.025;
  double alpha = 0.05;
  /// Further rates constrained with the same p0 (e.g. TNR next to TPR).
  std::vector<RateKind> extra_rates;
  /// False drops the count rows, so the CSVM reduces to an SVM on I.
  bool enabled = true;

  void validate() const;
};

struct HarnessConfig {
  KernelSpec::Kind kernel = KernelSpec::Kind::rbf;
  TargetConfig target;
  std::vector<Method> methods{std::begin(kAllMethods), std::end(kAllMethods)};
  double M1 = 100.0;
  double M2 = 100.0;
  double time_limit = 300.0;        // final CSVM per outer fold; <= 0 = none
  double inner_time_limit = 300.0;  // CSVM runs inside the tuning loop
  std::size_t node_limit = 0;
  /// Tune the CSVM with CSVM runs in the inner loop. When false the CSVM
  /// reuses the standard SVM's tuned (C, gamma).
  bool tune_csvm = true;
  bool global_standardize = false;
  std::size_t compress_threshold = 1000;  // compress when |Omega| exceeds this
  double compress_fraction = 0.2;
  std::size_t workers = 1;
  bool verbose = false;
  /// Called with the original row indices that feed every fitting step
  /// (standardization, compression, tuning, training) of an outer fold.
  std::function<void(std::size_t fold, std::string_view stage, std::span<const std::size_t> rows)> audit;

  void validate() const;
};

/// Stratified assignment of instances to k folds: each class is shuffled
/// with the seed and dealt round-robin, so fold class counts differ by at
/// most one. Returns the indices of each fold.
std::vector<std::vector<std::size_t>> stratified_folds(std::span<const int> labels, std::size_t k,
                                                       std::uint64_t seed);

/// Trained classifier in kernel-expansion form.
struct KernelModel {
  KernelSpec kernel;
  Eigen::MatrixXd support;  // rows
  Eigen::VectorXd alpha;
  double beta = 0.0;

  Eigen::VectorXd scores(const Eigen::MatrixXd& points) const;
};

struct Candidate {
  double C = 0.0, gamma = 0.0;
  double c_plus = 0.0, c_minus = 0.0;  // weighted baseline
};

struct TuneResult {
  Candidate best;
  double score = 0.0;        // mean inner-CV selection metric
  RateReport mean_rates;     // inner-CV means of the winner
  std::size_t evaluated = 0;
  std::size_t failed = 0;
};

/// One CSVM fit: SVM on I and J, intercept slid on J, CSVM warm-started.
/// `model` and `z` are meaningful only when `has_model` is set.
struct CsvmFit {
  bool has_model = false;
  KernelModel model;
  std::vector<int> z;  // over J
  std::string status;
  double objective = 0.0;
  double gap = 0.0;
  std::size_t nodes = 0;
  double p_star = 0.0;
  std::size_t required = 0, scope = 0;
  std::size_t achieved = 0;  // anchors in scope with z = 1
  std::size_t n_train = 0, n_anchor = 0;
  std::string message;
  std::string diagnosis;  // per-rate feasibility verdicts, set when infeasible
  bool passes_check = true;
};

/// Everything the tuning and refit steps need besides the data.
struct FitContext {
  const HarnessConfig* config = nullptr;
  Selection selection = Selection::accuracy;
  std::size_t inner_folds = 10;
  std::uint64_t seed = 1;
  double p0 = 0.5;  // already uplifted
};

/// Inner-CV grid search under the >= replacement rule (later candidates win
/// ties). Throws when every candidate fails to train.
TuneResult tune_grid(const Dataset& train, const GridSpec& grid, Method method, const FitContext& ctx);

/// Mean and sample standard deviation over folds.
struct Stat {
  double mean = 0.0, std = 0.0;
  std::size_t n = 0;
};
Stat summarize(std::span<const double> values);

struct MethodFold {
  bool ok = false;
  std::string error;
  RateReport validation;
  Candidate params;
  double target = 0.0;  // uplifted p0 for sliding-beta and CSVM, else 0
  double p_star = 0.0;  // the Hoeffding-adjusted bound actually imposed
  double seconds = 0.0;
  std::optional<CsvmFit> csvm;
};

struct FoldReport {
  std::size_t fold = 0;
  std::size_t n_train = 0, n_validation = 0;
  bool compressed = false;
  double rate0 = 0.0;   // inner-CV estimate of the target rate (tuned SVM)
  double p0 = 0.0;      // after the uplift
  std::map<Method, MethodFold> methods;
};

struct MethodSummary {
  Stat tpr, tnr, acc, gmean, target;
  std::size_t failed_folds = 0;
};

struct CvReport {
  std::string dataset;
  CvPlan plan;
  GridSpec grid;
  HarnessConfig config;
  std::vector<FoldReport> folds;
  std::map<Method, MethodSummary> summary;
  std::vector<std::string> notes;
  double wall_seconds = 0.0;
};

/// Per-method means and sample stds over folds that succeeded.
/// Requires at least two folds.
std::map<Method, MethodSummary> aggregate(std::span<const FoldReport> folds);

/// Nested cross-validation: outer folds for validation, inner folds for
/// tuning, then a refit on the outer training data per method.
CvReport run_algorithm1(const Dataset& data, const CvPlan& plan, const GridSpec& grid, const HarnessConfig& config);

/// CSVM fit on `train` (already standardized): split into I and J halves,
/// SVM over both, slide, warm-started branch-and-bound. An infeasible or
/// incumbent-free outcome is returned, not thrown.
CsvmFit fit_csvm(const Dataset& train, double C, double gamma, double p0, const HarnessConfig& config,
                 double time_limit, std::uint64_t seed);

}  // namespace csvm
