// Dual solver for the standard SVM:
//
//   min 1/2 lambda'Q lambda - sum lambda,  Q = YKY,
//   s.t. y'lambda = 0,  0 <= lambda_i <= c_i / 2,
//
// with second-order working set selection (Fan, Chen and Lin, 2005).
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "csvm/qp.hpp"

namespace csvm {

namespace {

constexpr double kTau = 1e-12;
constexpr long kMaxIterations = 10'000'000;

bool in_up(double y, double a, double c) { return (y > 0 && a < c) || (y < 0 && a > 0); }
bool in_low(double y, double a, double c) { return (y > 0 && a > 0) || (y < 0 && a < c); }

}  // namespace

QpSolution solve_standard_svm(const Eigen::MatrixXd& K, const Eigen::VectorXd& y, const Eigen::VectorXd& penalty,
                              double tol) {
  const Eigen::Index n = y.size();
  if (K.rows() != n || K.cols() != n || penalty.size() != n)
    throw std::invalid_argument("solve_standard_svm: size mismatch");
  bool pos = false, neg = false;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (y(i) == 1.0) pos = true;
    else if (y(i) == -1.0) neg = true;
    else throw std::invalid_argument("solve_standard_svm: labels must be +-1");
    if (!(penalty(i) > 0.0)) throw std::invalid_argument("solve_standard_svm: penalties must be positive");
  }
  if (!pos || !neg) throw std::invalid_argument("solve_standard_svm: both classes are required");

  const Eigen::VectorXd C = 0.5 * penalty;
  Eigen::VectorXd a = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd G = Eigen::VectorXd::Constant(n, -1.0);
  auto Q = [&](Eigen::Index i, Eigen::Index j) { return y(i) * y(j) * K(i, j); };

  long iter = 0;
  for (; iter < kMaxIterations; ++iter) {
    double gmax = -std::numeric_limits<double>::infinity();
    Eigen::Index i = -1;
    for (Eigen::Index t = 0; t < n; ++t)
      if (in_up(y(t), a(t), C(t)) && -y(t) * G(t) > gmax) {
        gmax = -y(t) * G(t);
        i = t;
      }
    double gmax2 = -std::numeric_limits<double>::infinity();
    Eigen::Index j = -1;
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index t = 0; t < n; ++t) {
      if (!in_low(y(t), a(t), C(t))) continue;
      gmax2 = std::max(gmax2, y(t) * G(t));
      if (i < 0) continue;
      const double diff = gmax + y(t) * G(t);
      if (diff > 0.0) {
        double quad = K(i, i) + K(t, t) - 2.0 * K(i, t);
        if (quad <= 0.0) quad = kTau;
        const double obj = -diff * diff / quad;
        if (obj <= best) {
          best = obj;
          j = t;
        }
      }
    }
    if (i < 0 || j < 0 || gmax + gmax2 < tol) break;

    const double ai_old = a(i), aj_old = a(j);
    double quad = K(i, i) + K(j, j) - 2.0 * K(i, j);
    if (quad <= 0.0) quad = kTau;
    if (y(i) != y(j)) {
      const double delta = (-G(i) - G(j)) / quad;
      const double diff = a(i) - a(j);
      a(i) += delta;
      a(j) += delta;
      if (diff > 0) {
        if (a(j) < 0) { a(j) = 0; a(i) = diff; }
      } else if (a(i) < 0) {
        a(i) = 0;
        a(j) = -diff;
      }
      if (diff > C(i) - C(j)) {
        if (a(i) > C(i)) { a(i) = C(i); a(j) = C(i) - diff; }
      } else if (a(j) > C(j)) {
        a(j) = C(j);
        a(i) = C(j) + diff;
      }
    } else {
      const double delta = (G(i) - G(j)) / quad;
      const double sum = a(i) + a(j);
      a(i) -= delta;
      a(j) += delta;
      if (sum > C(i)) {
        if (a(i) > C(i)) { a(i) = C(i); a(j) = sum - C(i); }
      } else if (a(j) < 0) {
        a(j) = 0;
        a(i) = sum;
      }
      if (sum > C(j)) {
        if (a(j) > C(j)) { a(j) = C(j); a(i) = sum - C(j); }
      } else if (a(i) < 0) {
        a(i) = 0;
        a(j) = sum;
      }
    }
    const double di = a(i) - ai_old, dj = a(j) - aj_old;
    for (Eigen::Index t = 0; t < n; ++t) G(t) += Q(t, i) * di + Q(t, j) * dj;
  }

  // Fresh gradient for the intercept.
  const Eigen::VectorXd ya = y.cwiseProduct(a);
  G = y.cwiseProduct(K * ya).array() - 1.0;

  double sum_free = 0.0;
  int n_free = 0;
  double lo = -std::numeric_limits<double>::infinity(), hi = std::numeric_limits<double>::infinity();
  const double eps = 1e-12;
  for (Eigen::Index t = 0; t < n; ++t) {
    const double b = -y(t) * G(t);
    if (a(t) > eps * C(t) && a(t) < C(t) * (1.0 - eps)) {
      sum_free += b;
      ++n_free;
    } else if ((a(t) <= eps * C(t)) == (y(t) > 0)) {
      lo = std::max(lo, b);
    } else {
      hi = std::min(hi, b);
    }
  }
  double beta;
  if (n_free > 0) beta = sum_free / n_free;
  else if (std::isfinite(lo) && std::isfinite(hi)) beta = 0.5 * (lo + hi);
  else beta = std::isfinite(lo) ? lo : hi;

  QpSolution s;
  s.lambda = a;
  s.mu.resize(0);
  s.z.resize(0);
  s.alpha = ya;
  s.beta = beta;
  const Eigen::VectorXd f = (K * ya).array() + beta;
  s.xi = (1.0 - y.cwiseProduct(f).array()).cwiseMax(0.0);
  s.objective = ya.dot(K * ya) + penalty.dot(s.xi);
  s.status = iter < kMaxIterations ? QpStatus::optimal : QpStatus::max_iter;
  s.iterations = static_cast<int>(std::min<long>(iter, std::numeric_limits<int>::max()));
  return s;
}

QpSolution solve_standard_svm(const Dataset& train, const PenaltyConfig& penalties, const KernelSpec& spec) {
  const auto [cp, cm] = penalties.resolve(train.weight_of_label(1), train.weight_of_label(-1));
  const Eigen::VectorXd y = train.labels();
  const Eigen::VectorXd c = slack_penalties(y, train.weights(), cp, cm);
  return solve_standard_svm(gram(spec, train.feature_matrix()).entries(), y, c);
}

}  // namespace csvm
