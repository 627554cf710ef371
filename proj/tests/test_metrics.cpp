#include <doctest.h>

#include <cmath>
#include <vector>

#include "csvm/metrics.hpp"
#include "csvm/rng.hpp"

using namespace csvm;

TEST_SUITE("metrics") {
  TEST_CASE("hoeffding_threshold values") {
    CHECK(hoeffding_threshold({RateKind::tpr, 0.5, 1.0, 0.0}, 7) == 0.5);
    CHECK(hoeffding_threshold({RateKind::tpr, 0.5, 1.0, 0.0}, 100000) == 0.5);
    // mpmath, 40 digits: 0.9865409191301142669091504360327552783249
    CHECK(std::abs(hoeffding_threshold({RateKind::tpr, 0.9, 0.05, 0.0}, 200) - 0.98654091913011427) < 1e-15);
    const double tpr0 = 0.8;
    const double expected = tpr0 + 0.025 + std::sqrt(std::log(0.05) / (-2.0 * 50));
    CHECK(hoeffding_threshold({RateKind::tpr, tpr0, 0.05, 0.025}, 50) == doctest::Approx(expected).epsilon(1e-15));
    // The uplift is capped at 1 before the confidence term is added.
    CHECK(hoeffding_threshold({RateKind::tpr, 0.99, 0.05, 0.025}, 50) ==
          doctest::Approx(1.0 + std::sqrt(std::log(20.0) / 100.0)));
  }

  TEST_CASE("hoeffding_threshold errors") {
    CHECK_THROWS(hoeffding_threshold({RateKind::tpr, 0.5, 0.0, 0.0}, 10));
    CHECK_THROWS(hoeffding_threshold({RateKind::tpr, 0.5, 1.5, 0.0}, 10));
    CHECK_THROWS(hoeffding_threshold({RateKind::tpr, 0.5, 0.05, 0.0}, 0));
  }

  TEST_CASE("hoeffding_threshold monotone in n and alpha") {
    const PerformanceTarget t{RateKind::tnr, 0.7, 0.05, 0.025};
    for (std::size_t n = 1; n < 500; ++n) CHECK(hoeffding_threshold(t, n + 1) < hoeffding_threshold(t, n));
    for (double a = 0.01; a < 0.95; a += 0.01) {
      PerformanceTarget lo = t, hi = t;
      lo.alpha = a;
      hi.alpha = a + 0.01;
      CHECK(hoeffding_threshold(hi, 30) < hoeffding_threshold(lo, 30));
      const double addon = hoeffding_threshold(lo, 30) - lo.uplifted();
      CHECK(addon == doctest::Approx(std::sqrt(std::log(1.0 / a) / 60.0)).epsilon(1e-14));
    }
  }

  TEST_CASE("count_target rounding and clipping") {
    CHECK(count_target(0.9, 10).required == 9);
    CHECK(count_target(0.91, 10).required == 10);
    const auto c = count_target(1.3, 10);
    CHECK(c.required == 10);
    CHECK(c.clipped);
    CHECK_FALSE(count_target(0.9, 10).clipped);
    CHECK(count_target(0.0, 10).required == 0);
    CHECK(count_target(-0.2, 10).required == 0);
    for (std::size_t n = 1; n < 60; ++n)
      for (double p = 0.0; p <= 1.0; p += 0.013) {
        const auto r = count_target(p, n).required;
        CHECK(static_cast<double>(r) / static_cast<double>(n) >= p - 1e-12);
        CHECK(r <= n);
      }
  }

  TEST_CASE("evaluate counting") {
    const std::vector<double> s{2, -1, -3, 0.5};
    const std::vector<int> y{1, 1, -1, -1};
    const auto r = evaluate(s, y);
    CHECK(r.tpr == 0.5);
    CHECK(r.tnr == 0.5);
    CHECK(r.acc == 0.5);
    CHECK(r.gmean == doctest::Approx(0.5));
    CHECK(r.tp == 1);
    CHECK(r.fn == 1);
    CHECK(r.tn == 1);
    CHECK(r.fp == 1);

    const std::vector<double> good{1, 2, -1, -0.1};
    const auto all = evaluate(good, y);
    CHECK(all.tpr == 1.0);
    CHECK(all.tnr == 1.0);
    CHECK(all.acc == 1.0);
    CHECK(all.gmean == 1.0);
  }

  TEST_CASE("evaluate edge cases") {
    const std::vector<double> s{1, -1};
    const std::vector<int> pos{1, 1};
    const auto r = evaluate(s, pos);
    CHECK(r.no_negatives);
    CHECK(r.tnr == 1.0);
    CHECK(r.tpr == 0.5);
    const std::vector<int> one{1};
    CHECK_THROWS(evaluate(s, one));
    CHECK_THROWS(evaluate(std::span<const double>(), std::span<const int>()));

    const std::vector<double> zeros(200, 0.0);
    std::vector<int> labels(200, 1);
    const auto a = evaluate(zeros, labels, 5), b = evaluate(zeros, labels, 5);
    CHECK(a.ties == 200);
    CHECK(a.tp == b.tp);
    CHECK(a.tp > 60);
    CHECK(a.tp < 140);
  }

  TEST_CASE("evaluate invariant under positive rescaling") {
    Rng rng(3);
    for (int t = 0; t < 50; ++t) {
      std::vector<double> s(40);
      std::vector<int> y(40);
      for (int i = 0; i < 40; ++i) {
        s[i] = rng.normal();
        y[i] = rng.coin() ? 1 : -1;
      }
      const double k = 0.01 + 100 * rng.uniform();
      std::vector<double> ks(s);
      for (auto& v : ks) v *= k;
      const auto a = evaluate(s, y), b = evaluate(ks, y);
      CHECK(a.tp == b.tp);
      CHECK(a.tn == b.tn);
    }
  }

  TEST_CASE("rate names") {
    CHECK(parse_rate("tnr") == RateKind::tnr);
    CHECK(to_string(RateKind::acc) == "acc");
    CHECK_THROWS(parse_rate("auc"));
  }
}
