#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "csvm/harness.hpp"
#include "support.hpp"

using namespace csvm;

namespace {

std::vector<int> int_labels(const Dataset& d) {
  std::vector<int> y;
  for (const auto& x : d.instances()) y.push_back(x.label);
  return y;
}

GridSpec tiny_grid() { return {{1.0, 4.0}, {0.25, 0.5}, {1.0, 4.0}, {1.0, 4.0}}; }

HarnessConfig quick_config() {
  HarnessConfig cfg;
  cfg.time_limit = 20.0;
  cfg.inner_time_limit = 20.0;
  return cfg;
}

}  // namespace

TEST_SUITE("harness") {
  TEST_CASE("stratified folds partition the data with balanced class counts") {
    Rng rng(3);
    const Dataset d = testing::blobs(23, 41, 2, 1.0, rng);
    const auto y = int_labels(d);
    const auto folds = stratified_folds(y, 5, 11);
    REQUIRE(folds.size() == 5);
    std::set<std::size_t> seen;
    std::size_t lo_pos = 99, hi_pos = 0, lo_all = 99, hi_all = 0;
    for (const auto& f : folds) {
      std::size_t pos = 0;
      for (auto i : f) {
        CHECK(seen.insert(i).second);
        pos += y[i] > 0;
      }
      lo_pos = std::min(lo_pos, pos);
      hi_pos = std::max(hi_pos, pos);
      lo_all = std::min(lo_all, f.size());
      hi_all = std::max(hi_all, f.size());
    }
    CHECK(seen.size() == d.size());
    CHECK(hi_pos - lo_pos <= 1);
    CHECK(hi_all - lo_all <= 1);
    CHECK(stratified_folds(y, 5, 11) == folds);
    CHECK(stratified_folds(y, 5, 12) != folds);
  }

  TEST_CASE("folds that would miss a class are rejected") {
    const std::vector<int> y{1, 1, -1, -1, -1, -1};
    CHECK_THROWS_AS(stratified_folds(y, 3, 1), DataError);
    CHECK_THROWS_AS(stratified_folds(y, 1, 1), std::invalid_argument);
  }

  TEST_CASE("summary uses the sample standard deviation") {
    const std::vector<double> v{0.8, 1.0};
    const Stat s = summarize(v);
    CHECK(s.mean == doctest::Approx(0.9).epsilon(1e-15));
    CHECK(s.std == doctest::Approx(std::sqrt(0.02)).epsilon(1e-15));
    CHECK(s.n == 2);
    const std::vector<double> one{0.7};
    CHECK(summarize(one).std == 0.0);
  }

  TEST_CASE("aggregate skips failed folds and needs two folds") {
    std::vector<FoldReport> folds(3);
    const double tpr[] = {0.8, 1.0, 0.0};
    for (std::size_t f = 0; f < 3; ++f) {
      MethodFold mf;
      mf.ok = f < 2;
      mf.validation.tpr = tpr[f];
      folds[f].methods[Method::svm] = mf;
    }
    const auto summary = aggregate(folds);
    CHECK(summary.at(Method::svm).failed_folds == 1);
    CHECK(summary.at(Method::svm).tpr.mean == doctest::Approx(0.9));
    CHECK(summary.at(Method::svm).tpr.std == doctest::Approx(0.1414213562373095));
    CHECK_THROWS_AS(aggregate(std::span<const FoldReport>(folds).first(1)), std::invalid_argument);
  }

  TEST_CASE("grids, plans and methods validate their input") {
    CHECK(GridSpec::full().C.size() == 11);
    CHECK(GridSpec::full().gamma.front() == 1.0 / 32.0);
    CHECK(GridSpec::small().C == std::vector<double>{0.125, 1.0, 8.0});
    GridSpec g = GridSpec::small();
    g.C = {1.0, 1.0};
    CHECK_THROWS_AS(g.validate(), std::invalid_argument);
    for (Method m : kAllMethods) CHECK(parse_method(to_string(m)) == m);
    CHECK_THROWS_AS(parse_method("lasso"), std::invalid_argument);

    Rng rng(5);
    const Dataset big = testing::blobs(200, 900, 2, 1.0, rng);
    const CvPlan p = CvPlan::for_dataset(big);
    CHECK(p.outer_folds == 5);
    CHECK(p.selection == Selection::gmean);
    const Dataset even = testing::blobs(50, 50, 2, 1.0, rng);
    CHECK(CvPlan::for_dataset(even).outer_folds == 10);
    CHECK(CvPlan::for_dataset(even).selection == Selection::accuracy);
  }

  TEST_CASE("equal scores go to the later grid point") {
    Rng rng(9);
    const Dataset d = testing::blobs(12, 12, 2, 6.0, rng);
    HarnessConfig cfg = quick_config();
    FitContext ctx;
    ctx.config = &cfg;
    ctx.inner_folds = 3;
    const TuneResult r = tune_grid(d, tiny_grid(), Method::svm, ctx);
    CHECK(r.score == 1.0);
    CHECK(r.best.C == 4.0);
    CHECK(r.best.gamma == 0.5);
    CHECK(r.evaluated == 4);

    const TuneResult w = tune_grid(d, tiny_grid(), Method::weighted_svm, ctx);
    CHECK(w.evaluated == 8);
    CHECK(w.best.c_plus == 4.0);
    CHECK(w.best.c_minus == 4.0);
    CHECK(w.best.gamma == 0.5);
  }

  TEST_CASE("separable toy: every method fits and validates perfectly") {
    Rng rng(21);
    const Dataset d = testing::blobs(10, 10, 2, 4.0, rng);
    CvPlan plan;
    plan.outer_folds = 2;
    plan.inner_folds = 2;
    HarnessConfig cfg = quick_config();
    cfg.target.p0 = 0.9;
    cfg.target.delta = 0.0;
    const CvReport r = run_algorithm1(d, plan, tiny_grid(), cfg);
    REQUIRE(r.folds.size() == 2);
    for (const auto& f : r.folds) {
      CHECK(f.n_train == 10);
      CHECK(f.p0 == doctest::Approx(0.9));
      for (Method m : kAllMethods) {
        INFO(to_string(m), " fold ", f.fold, ": ", f.methods.at(m).error);
        CHECK(f.methods.at(m).ok);
      }
      CHECK(f.methods.at(Method::svm).validation.acc == 1.0);
      CHECK(f.methods.at(Method::csvm).csvm->passes_check);
      CHECK(f.methods.at(Method::csvm).target == doctest::Approx(0.9));
      CHECK(f.methods.at(Method::csvm).p_star > 0.9);
    }
    CHECK(r.summary.at(Method::svm).tpr.mean == 1.0);
    CHECK(r.summary.at(Method::csvm).tpr.mean == 1.0);
  }

  TEST_CASE("no validation row reaches any fitting step") {
    Rng rng(4);
    const Dataset d = testing::blobs(15, 25, 3, 1.0, rng);
    CvPlan plan;
    plan.outer_folds = 4;
    plan.inner_folds = 3;
    plan.seed = 17;
    const auto folds = stratified_folds(int_labels(d), plan.outer_folds, plan.seed);
    for (bool global : {false, true}) {
      HarnessConfig cfg = quick_config();
      cfg.methods = {Method::svm, Method::sliding_beta};
      cfg.global_standardize = global;
      std::size_t calls = 0, leaks = 0;
      cfg.audit = [&](std::size_t fold, std::string_view stage, std::span<const std::size_t> rows) {
        ++calls;
        for (auto i : rows)
          if (std::find(folds[fold].begin(), folds[fold].end(), i) != folds[fold].end()) {
            ++leaks;
            CHECK(stage == "standardize");
          }
      };
      const CvReport r = run_algorithm1(d, plan, tiny_grid(), cfg);
      CHECK(calls == 3 * plan.outer_folds);
      CHECK((leaks > 0) == global);
      CHECK(r.notes.empty() != global);
    }
  }

  TEST_CASE("same seed gives the same report, with any worker count") {
    Rng rng(8);
    const Dataset d = testing::blobs(14, 18, 2, 0.8, rng);
    CvPlan plan;
    plan.outer_folds = 3;
    plan.inner_folds = 2;
    HarnessConfig cfg = quick_config();
    cfg.methods = {Method::svm, Method::weighted_svm, Method::sliding_beta};
    const CvReport a = run_algorithm1(d, plan, tiny_grid(), cfg);
    cfg.workers = 3;
    const CvReport b = run_algorithm1(d, plan, tiny_grid(), cfg);
    for (std::size_t f = 0; f < a.folds.size(); ++f)
      for (const auto& [m, mf] : a.folds[f].methods) {
        CHECK(mf.validation.tpr == b.folds[f].methods.at(m).validation.tpr);
        CHECK(mf.validation.tnr == b.folds[f].methods.at(m).validation.tnr);
        CHECK(mf.params.C == b.folds[f].methods.at(m).params.C);
      }
  }

  TEST_CASE("large training folds are compressed") {
    Rng rng(12);
    const Dataset d = testing::blobs(30, 30, 2, 2.0, rng);
    CvPlan plan;
    plan.outer_folds = 2;
    plan.inner_folds = 2;
    HarnessConfig cfg = quick_config();
    cfg.methods = {Method::svm};
    cfg.compress_threshold = 50;
    cfg.compress_fraction = 0.5;
    const CvReport r = run_algorithm1(d, plan, tiny_grid(), cfg);
    for (const auto& f : r.folds) CHECK(f.compressed);
    CHECK(!r.notes.empty());
    cfg.compress_threshold = 60;
    for (const auto& f : run_algorithm1(d, plan, tiny_grid(), cfg).folds) CHECK(!f.compressed);
  }
}

TEST_SUITE("harness") {
  TEST_CASE("without the target the CSVM fit is the SVM on I") {
    Rng rng(31);
    const Dataset d = testing::blobs(16, 20, 2, 0.7, rng);
    HarnessConfig cfg = quick_config();
    cfg.target.enabled = false;
    const CsvmFit fit = fit_csvm(d, 2.0, 0.5, 0.9, cfg, 20.0, 5);
    CHECK(fit.required == 0);
    CHECK(fit.status == "proven_optimal");

    std::vector<std::size_t> all(d.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    const TrainSplit sp = split_half(d, all, 5);
    const Dataset I = d.subset(sp.train);
    const Eigen::VectorXd y = I.labels(), w = I.weights();
    const auto G = gram(KernelSpec::rbf(0.5), I.feature_matrix()).entries();
    const QpSolution svm = solve_standard_svm(
        G, y, slack_penalties(y, w, 2.0 / I.weight_of_label(1), 2.0 / I.weight_of_label(-1)));
    // The intercept is not unique when every support vector sits at its bound.
    CHECK(fit.objective == doctest::Approx(svm.objective).epsilon(1e-6));
  }
}
