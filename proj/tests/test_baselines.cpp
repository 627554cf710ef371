#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "csvm/baselines.hpp"
#include "support.hpp"

using namespace csvm;

namespace {

CountConstraint need(RateKind r, std::size_t req, std::size_t scope) { return {r, req, scope, 0.0, false}; }

}  // namespace

TEST_SUITE("baselines") {
  TEST_CASE("shift is zero when targets already hold") {
    const std::vector<double> s{0.5, 1.0, -0.2};
    const std::vector<int> y{1, 1, -1};
    const std::vector<CountConstraint> c{need(RateKind::tpr, 2, 2)};
    CHECK(minimal_shift(s, y, c) == 0.0);
  }

  TEST_CASE("sort-based shift for a TPR target") {
    const std::vector<double> s{-0.5, -0.1, 0.3};
    const std::vector<int> y{1, 1, 1};
    std::vector<CountConstraint> c{need(RateKind::tpr, 2, 3)};
    CHECK(minimal_shift(s, y, c) == doctest::Approx(0.1 + 1e-9).epsilon(1e-15));
    c[0].required = 3;
    CHECK(minimal_shift(s, y, c) == doctest::Approx(0.5 + 1e-9).epsilon(1e-15));
  }

  TEST_CASE("TNR target shifts downwards; tie groups move together") {
    const std::vector<double> s{0.4, 0.4, 0.1, -1.0};
    const std::vector<int> y{-1, -1, -1, -1};
    const std::vector<CountConstraint> c{need(RateKind::tnr, 2, 4)};
    CHECK(minimal_shift(s, y, c) == doctest::Approx(-0.1 - 1e-9).epsilon(1e-15));
    const std::vector<CountConstraint> c3{need(RateKind::tnr, 3, 4)};
    const double t = minimal_shift(s, y, c3);
    CHECK(t == doctest::Approx(-0.4 - 1e-9).epsilon(1e-15));
    CHECK(achieved_counts(s, y, c3, t)[0] == 4);
  }

  TEST_CASE("mixed directions and unreachable targets are rejected") {
    const std::vector<double> s{0.1, -0.1};
    const std::vector<int> y{1, -1};
    const std::vector<CountConstraint> mixed{need(RateKind::tpr, 1, 1), need(RateKind::tnr, 1, 1)};
    CHECK_THROWS_AS(minimal_shift(s, y, mixed), SlideError);
    const std::vector<CountConstraint> too_many{need(RateKind::tpr, 2, 1)};
    CHECK_THROWS_AS(minimal_shift(s, y, too_many), SlideError);
    const std::vector<double> bad{-0.1, 0.1};
    const std::vector<CountConstraint> acc{need(RateKind::acc, 2, 2)};
    CHECK_THROWS_AS(minimal_shift(bad, y, acc), SlideError);
  }

  TEST_CASE("ACC target scans every threshold") {
    const std::vector<double> s{0.3, -0.2, 0.5, 0.1};
    const std::vector<int> y{1, 1, -1, -1};
    const std::vector<CountConstraint> c{need(RateKind::acc, 2, 4)};
    // One correct at zero; -0.1 - eps fixes the 0.1 negative, +0.2 + eps
    // would fix the -0.2 positive. The smaller move wins.
    CHECK(minimal_shift(s, y, c) == doctest::Approx(-0.1 - 1e-9).epsilon(1e-15));
  }

  TEST_CASE("random minimality certificates") {
    Rng rng(5);
    for (int t = 0; t < 200; ++t) {
      const std::size_t n = 2 + rng.below(40);
      std::vector<double> s(n);
      std::vector<int> y(n);
      for (std::size_t i = 0; i < n; ++i) {
        y[i] = rng.coin() ? 1 : -1;
        s[i] = rng.normal() + 0.3 * y[i];
      }
      const std::size_t pos = static_cast<std::size_t>(std::count(y.begin(), y.end(), 1));
      const RateKind kind = t % 3 == 0 ? RateKind::tpr : t % 3 == 1 ? RateKind::tnr : RateKind::acc;
      const std::size_t scope = kind == RateKind::tpr ? pos : kind == RateKind::tnr ? n - pos : n;
      if (scope == 0) continue;
      const std::vector<CountConstraint> c{need(kind, rng.below(scope + 1), scope)};
      double shift;
      try {
        shift = minimal_shift(s, y, c);
      } catch (const SlideError&) {
        CHECK(kind == RateKind::acc);
        continue;
      }
      CHECK(achieved_counts(s, y, c, shift)[0] >= c[0].required);
      if (shift != 0.0) {
        const double shrunk = shift - std::copysign(2e-9, shift);
        CHECK(achieved_counts(s, y, c, shrunk)[0] < c[0].required);
      }
    }
  }

  TEST_CASE("larger TPR target never needs a smaller shift") {
    Rng rng(6);
    for (int t = 0; t < 50; ++t) {
      std::vector<double> s(15);
      std::vector<int> y(15, 1);
      for (auto& v : s) v = rng.normal();
      double prev = -INFINITY;
      for (std::size_t r = 0; r <= 15; ++r) {
        const std::vector<CountConstraint> c{need(RateKind::tpr, r, 15)};
        const double sh = minimal_shift(s, y, c);
        if (sh > 0) {
          CHECK(sh >= prev);
          prev = sh;
        }
      }
    }
  }

  TEST_CASE("slide_beta leaves the coefficients untouched") {
    Rng rng(9);
    const Dataset d = testing::blobs(15, 15, 2, 0.3, rng);
    const auto spec = KernelSpec::rbf(1.0);
    const QpSolution base = solve_standard_svm(d, PenaltyConfig::coupled(1.0), spec);
    const Eigen::MatrixXd K = gram(spec, d.feature_matrix()).entries();
    const Eigen::VectorXd f = decision_scores(base, K);
    std::vector<double> s(f.data(), f.data() + f.size());
    std::vector<int> y;
    for (const auto& x : d.instances()) y.push_back(x.label);
    const std::vector<CountConstraint> c{need(RateKind::tpr, 15, 15)};
    const SlidingBetaModel m = slide_beta(base, s, y, c);
    CHECK(m.base.alpha == base.alpha);
    CHECK(m.base.lambda == base.lambda);
    CHECK(m.base.beta == base.beta);
    CHECK(m.achieved[0] == 15);
    CHECK((m.scores(K) - f).cwiseAbs().maxCoeff() == doctest::Approx(std::abs(m.beta_shift)));
  }

  TEST_CASE("weighted SVM: equal penalties reproduce the standard SVM") {
    Rng rng(10);
    const Dataset d = testing::blobs(12, 20, 2, 0.5, rng);
    const auto spec = KernelSpec::rbf(0.5);
    const auto a = fit_weighted_svm(d, 0.1, 0.1, spec);
    const auto b = solve_standard_svm(d, PenaltyConfig::independent(0.1, 0.1), spec);
    CHECK(a.alpha == b.alpha);
    CHECK(a.beta == b.beta);
  }

  TEST_CASE("weighted SVM: favouring positives does not lower training TPR") {
    Rng rng(12);
    const Dataset d = testing::blobs(15, 45, 2, 0.4, rng);
    const auto spec = KernelSpec::rbf(0.5);
    const Eigen::MatrixXd K = gram(spec, d.feature_matrix()).entries();
    auto tpr = [&](const QpSolution& s) {
      const Eigen::VectorXd f = decision_scores(s, K);
      int tp = 0;
      for (std::size_t i = 0; i < d.size(); ++i) tp += d[i].label > 0 && f(static_cast<Eigen::Index>(i)) > 0;
      return tp;
    };
    CHECK(tpr(fit_weighted_svm(d, 2.0, 0.02, spec)) >= tpr(fit_weighted_svm(d, 0.02, 0.02, spec)));
  }
}
