#include <doctest.h>

#include <cmath>
#include <vector>

#include <Eigen/Eigenvalues>

#include "csvm/kernel.hpp"
#include "support.hpp"

using namespace csvm;

TEST_SUITE("kernel") {
  TEST_CASE("kernel_eval values") {
    const std::vector<double> a{0.3, -1.2}, o{0, 0}, one{1, 1}, p{1, 2}, q{3, 4};
    for (double g : {0.01, 1.0, 30.0}) CHECK(kernel_eval(KernelSpec::rbf(g), a, a) == 1.0);
    // exp(-2) to 40 digits: 0.1353352832366126918939994949724844034076
    CHECK(std::abs(kernel_eval(KernelSpec::rbf(1.0), o, one) - 0.1353352832366126919) < 1e-16);
    CHECK(kernel_eval(KernelSpec::linear(), p, q) == 11.0);
  }

  TEST_CASE("kernel_eval errors") {
    const std::vector<double> a{1, 2}, b{1};
    CHECK_THROWS_AS(kernel_eval(KernelSpec::linear(), a, b), KernelError);
    CHECK_THROWS_AS(kernel_eval(KernelSpec::rbf(0.0), a, a), KernelError);
    CHECK_THROWS_AS(kernel_eval(KernelSpec::rbf(-1.0), a, a), KernelError);
    CHECK_THROWS_AS(KernelSpec::parse("poly", 1.0), KernelError);
    CHECK(KernelSpec::parse("linear", 0.0).kind == KernelSpec::Kind::linear);
  }

  TEST_CASE("small gram matrices") {
    Eigen::MatrixXd one(1, 3);
    one << 1, 2, 3;
    const auto g1 = gram(KernelSpec::rbf(0.5), one);
    CHECK(g1.size() == 1);
    CHECK(g1(0, 0) == 1.0);

    Eigen::MatrixXd twin(2, 2);
    twin << 0.5, -1, 0.5, -1;
    const auto g2 = gram(KernelSpec::rbf(2.0), twin);
    CHECK(g2.entries() == Eigen::MatrixXd::Ones(2, 2));
    CHECK_THROWS_AS(gram(KernelSpec::rbf(1.0), Eigen::MatrixXd(0, 2)), KernelError);
  }

  TEST_CASE("gram is exactly symmetric, rbf entries in (0,1], PSD") {
    Rng rng(42);
    for (int trial = 0; trial < 20; ++trial) {
      const auto n = static_cast<Eigen::Index>(3 + rng.below(48));
      Eigen::MatrixXd X(n, 3);
      for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = rng.normal();
      for (const auto& spec : {KernelSpec::rbf(0.1 + rng.uniform() * 3), KernelSpec::linear()}) {
        const auto g = gram(spec, X);
        CHECK(g.entries() == g.entries().transpose());
        if (spec.kind == KernelSpec::Kind::rbf) {
          CHECK(g.entries().maxCoeff() <= 1.0);
          CHECK(g.entries().minCoeff() > 0.0);
          CHECK(g.entries().diagonal() == Eigen::VectorXd::Ones(n));
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g.entries());
        CHECK(es.eigenvalues().minCoeff() >= -1e-8);
        for (Eigen::Index s = 0; s < n; s += 7)
          for (Eigen::Index t = 0; t < n; t += 5) {
            Eigen::RowVectorXd rs = X.row(s), rt = X.row(t);
            CHECK(g(s, t) == doctest::Approx(kernel_eval(spec, std::span<const double>(rs.data(), 3),
                                                         std::span<const double>(rt.data(), 3))).epsilon(1e-14));
          }
      }
    }
  }

  TEST_CASE("slices and cross gram") {
    Eigen::MatrixXd X(4, 2);
    X << 0, 0, 1, 0, 0, 1, 1, 1;
    const auto spec = KernelSpec::rbf(0.7);
    const auto g = gram(spec, X);
    const std::vector<std::size_t> idx{3, 1};
    const Eigen::MatrixXd s = g.slice(idx);
    CHECK(s(0, 1) == g(3, 1));
    CHECK(s(1, 1) == 1.0);
    const std::vector<std::size_t> rows{0}, cols{2, 3};
    const Eigen::MatrixXd b = g.block(rows, cols);
    CHECK(b(0, 1) == g(0, 3));
    const Eigen::MatrixXd c = cross_gram(spec, X.topRows(2), X);
    CHECK((c - g.entries().topRows(2)).cwiseAbs().maxCoeff() < 1e-15);
    CHECK_THROWS_AS(cross_gram(spec, Eigen::MatrixXd::Zero(1, 3), X), KernelError);
  }
}
