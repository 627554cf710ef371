#include <doctest.h>

#include <cmath>
#include <vector>

#include "csvm/baselines.hpp"
#include "csvm/csvm.hpp"
#include "support.hpp"

using namespace csvm;

using testing::overlapping_line;
using testing::two_sided;

TEST_SUITE("csvm") {
  TEST_CASE("count propagation and scopes") {
    const Eigen::VectorXd y = (Eigen::VectorXd(4) << 1, -1, 1, 1).finished();
    CHECK(anchor_scope(RateKind::tpr, y) == std::vector<std::size_t>{0, 2, 3});
    CHECK(anchor_scope(RateKind::tnr, y) == std::vector<std::size_t>{1});
    CHECK(anchor_scope(RateKind::acc, y).size() == 4);
  }

  TEST_CASE("without constraints the model is the SVM on I") {
    Rng rng(4);
    for (int t = 0; t < 10; ++t) {
      const Dataset d = testing::random_sample(15, 6, 2, 0.6, rng);
      const auto spec = KernelSpec::rbf(0.7);
      const Eigen::VectorXd y = d.labels();
      const CsvmProblem p = make_csvm_problem(gram(spec, d.feature_matrix()).entries(), y, Eigen::VectorXd::Ones(15), 15,
                                              0.2, 0.3, {}, spec);
      const CsvmModel m = solve_csvm(p);
      REQUIRE(m.status == SolveStatus::proven_optimal);
      const QpSolution ref = solve_standard_svm(p.qp.gram.topLeftCorner(15, 15), y.head(15), p.qp.penalty);
      CHECK(std::abs(m.objective - ref.objective) <= 1e-6 * std::max(1.0, ref.objective));
      CHECK(m.gap == 0.0);
    }
  }

  TEST_CASE("branch-and-bound matches enumeration on small instances") {
    Rng rng(77);
    for (int t = 0; t < 15; ++t) {
      const std::size_t nI = 6 + rng.below(10), nJ = 3 + rng.below(6);
      CsvmProblem p = testing::random_csvm(nI, nJ, 0.6 + 0.4 * rng.uniform(), rng, KernelSpec::rbf(0.5 + rng.uniform()));
      p.time_limit = 0.0;
      const CsvmModel m = solve_csvm(p);
      const auto ref = testing::enumerate_objective(p);
      if (!ref) {
        CHECK(m.status == SolveStatus::infeasible);
        continue;
      }
      REQUIRE(m.status == SolveStatus::proven_optimal);
      CHECK(std::abs(m.objective - *ref) <= 1e-6 * std::max(1.0, std::abs(*ref)));
      CHECK(check_model(p, m).empty());
      for (std::size_t k = 1; k < m.incumbent_history.size(); ++k)
        CHECK(m.incumbent_history[k].second <= m.incumbent_history[k - 1].second);
    }
  }

  TEST_CASE("adding a constraint never lowers the optimum") {
    Rng rng(13);
    for (int t = 0; t < 8; ++t) {
      CsvmProblem p = testing::random_csvm(10, 6, 0.5, rng, KernelSpec::rbf(1.0));
      const CsvmModel loose = solve_csvm(p);
      const Eigen::VectorXd yj = p.qp.labels.tail(6);
      const auto scope = anchor_scope(RateKind::tnr, yj);
      const auto c = count_target(0.8, scope.size(), RateKind::tnr);
      p.constraints.push_back(c);
      p.qp.counts.push_back(AnchorCount{scope, c.required});
      const CsvmModel tight = solve_csvm(p);
      if (tight.status == SolveStatus::infeasible) continue;
      REQUIRE(loose.status == SolveStatus::proven_optimal);
      REQUIRE(tight.status == SolveStatus::proven_optimal);
      CHECK(tight.objective >= loose.objective - 1e-7);
    }
  }

  TEST_CASE("two-sided 100% targets with a linear kernel on overlapping data are infeasible") {
    const Dataset d = overlapping_line(40);
    CsvmProblem p = two_sided(d, 20, KernelSpec::linear());
    p.time_limit = 30.0;
    const CsvmModel m = solve_csvm(p);
    CHECK(m.status == SolveStatus::infeasible);
    CHECK(m.message.find("cannot be met together") != std::string::npos);
    CHECK(diagnose_feasibility(p).summary == "possibly infeasible");
  }

  TEST_CASE("feasibility diagnosis") {
    const Dataset d = overlapping_line(20);
    CsvmProblem p = two_sided(d, 10, KernelSpec::rbf(1.0));
    CHECK(diagnose_feasibility(p).summary == "feasible (separating kernel)");
    p.constraints.pop_back();
    p.qp.counts.pop_back();
    CHECK(diagnose_feasibility(p).summary == "feasible by intercept shift");
    p.kernel = KernelSpec::linear();
    CHECK(diagnose_feasibility(p).entries.at(0).verdict == "feasible by intercept shift");
  }

  TEST_CASE("warm start from an SVM that already meets the target") {
    Rng rng(40);
    const Dataset d = testing::blobs(12, 12, 2, 2.5, rng);
    std::vector<std::size_t> order(24);
    for (std::size_t i = 0; i < 24; ++i) order[i] = i;
    seeded_shuffle(order, 3);
    const Dataset s = d.subset(order);
    const auto spec = KernelSpec::rbf(0.5);
    const Eigen::VectorXd y = s.labels();
    const Eigen::VectorXd yj = y.tail(12);
    const auto c = count_target(0.5, anchor_scope(RateKind::tpr, yj).size(), RateKind::tpr);
    const CsvmProblem p = make_csvm_problem(gram(spec, s.feature_matrix()).entries(), y, Eigen::VectorXd::Ones(12), 12,
                                            0.5, 0.5, std::span<const CountConstraint>(&c, 1), spec);
    const QpSolution svm = solve_standard_svm(p.qp.gram, y, Eigen::VectorXd::Constant(24, 0.5));
    const WarmStart w = warm_start_from_svm(svm, p);
    REQUIRE(w.model);
    CHECK(w.beta_shift == 0.0);
    const Eigen::VectorXd f = (p.qp.gram.bottomRows(12) * svm.alpha).array() + svm.beta;
    for (std::size_t j = 0; j < 12; ++j)
      CHECK(w.model->z[j] == (yj(static_cast<Eigen::Index>(j)) * f(static_cast<Eigen::Index>(j)) > 0));
    CHECK(check_model(p, *w.model).empty());
    // The warm objective is the fixed-z optimum itself.
    QpProblem fixed = p.qp;
    for (int v : w.model->z) fixed.status.push_back(v ? AnchorStatus::fixed_one : AnchorStatus::fixed_zero);
    CHECK(w.model->objective <= 1.01 * solve_qp(fixed).objective);
    const CsvmModel m = solve_csvm(p, &*w.model);
    CHECK(m.objective <= w.model->objective + 1e-9);
  }

  TEST_CASE("warm start needing a shift flips exactly the missing positives") {
    Rng rng(41);
    const Dataset d = testing::random_sample(14, 12, 2, 0.3, rng);
    const auto spec = KernelSpec::rbf(1.0);
    const Eigen::VectorXd y = d.labels();
    const Eigen::VectorXd yj = y.tail(12);
    const auto scope = anchor_scope(RateKind::tpr, yj);
    const QpSolution svm = solve_standard_svm(gram(spec, d.feature_matrix()).entries(), y, Eigen::VectorXd::Constant(26, 0.2));
    const Eigen::VectorXd f = (gram(spec, d.feature_matrix()).entries().bottomRows(12) * svm.alpha).array() + svm.beta;
    std::size_t correct = 0;
    std::vector<double> missed;
    for (auto j : scope) {
      const double v = f(static_cast<Eigen::Index>(j));
      if (v > 0) ++correct;
      else missed.push_back(v);
    }
    if (missed.size() < 2) return;
    std::sort(missed.rbegin(), missed.rend());
    const CountConstraint c{RateKind::tpr, correct + 2, scope.size(), 0.0, false};
    const CsvmProblem p = make_csvm_problem(gram(spec, d.feature_matrix()).entries(), y, Eigen::VectorXd::Ones(14), 14,
                                            0.2, 0.2, std::span<const CountConstraint>(&c, 1), spec);
    const WarmStart w = warm_start_from_svm(svm, p);
    CHECK(w.beta_shift == doctest::Approx(-missed[1] + kSlideMargin).epsilon(1e-12));
    std::size_t flipped = 0;
    for (auto j : scope) {
      const double v = f(static_cast<Eigen::Index>(j));
      if (v <= 0 && v + w.beta_shift > 0) ++flipped;
    }
    CHECK(flipped == 2);
  }

  TEST_CASE("warm start reports an empty scope") {
    Rng rng(42);
    const Dataset d = testing::blobs(6, 6, 2, 1.0, rng);
    std::vector<std::size_t> idx{0, 1, 2, 6, 7, 8, 9, 10, 11};  // anchors all negative
    const Dataset s = d.subset(idx);
    const auto spec = KernelSpec::rbf(1.0);
    CsvmProblem p = make_csvm_problem(gram(spec, s.feature_matrix()).entries(), s.labels(), Eigen::VectorXd::Ones(5), 5,
                                      1.0, 1.0, {}, spec);
    p.constraints.push_back(CountConstraint{RateKind::tpr, 1, 0, 1.0, false});
    p.qp.counts.push_back(AnchorCount{{}, 1});
    const QpSolution svm = solve_standard_svm(p.qp.gram, s.labels(), Eigen::VectorXd::Ones(9));
    const WarmStart w = warm_start_from_svm(svm, p);
    CHECK_FALSE(w.model);
    CHECK(w.note.find("warm start unavailable") == 0);
  }

  TEST_CASE("node limit stops with an incumbent and a non-negative gap") {
    Rng rng(90);
    CsvmProblem p = testing::random_csvm(20, 14, 0.95, rng, KernelSpec::rbf(0.8));
    p.node_limit = 3;
    const CsvmModel m = solve_csvm(p);
    if (m.status == SolveStatus::incumbent_at_timeout) {
      CHECK(m.gap >= 0.0);
      CHECK(check_model(p, m).empty());
    } else {
      CHECK((m.status == SolveStatus::proven_optimal || m.status == SolveStatus::no_incumbent ||
             m.status == SolveStatus::infeasible));
    }
    const CsvmModel again = solve_csvm(p);
    CHECK(again.objective == m.objective);
    CHECK(again.z == m.z);
  }
}
