#include "csvm/kernel.hpp"

#include <cmath>

namespace csvm {

void KernelSpec::validate() const {
  if (kind == Kind::rbf && !(gamma > 0.0 && std::isfinite(gamma)))
    throw KernelError("rbf kernel needs gamma > 0");
}

KernelSpec KernelSpec::parse(const std::string& kind, double gamma) {
  KernelSpec spec;
  if (kind == "linear") {
    spec = linear();
  } else if (kind == "rbf") {
    spec = rbf(gamma);
  } else {
    throw KernelError("unknown kernel '" + kind + "'");
  }
  spec.validate();
  return spec;
}

namespace {

template <class A, class B>
double eval_rows(const KernelSpec& spec, const A& x, const B& xp) {
  if (spec.kind == KernelSpec::Kind::linear) return x.dot(xp);
  return std::exp(-spec.gamma * (x - xp).squaredNorm());
}

}  // namespace

double kernel_eval(const KernelSpec& spec, std::span<const double> x, std::span<const double> xp) {
  if (x.size() != xp.size()) throw KernelError("kernel_eval: dimension mismatch");
  spec.validate();
  const Eigen::Map<const Eigen::VectorXd> a(x.data(), static_cast<Eigen::Index>(x.size()));
  const Eigen::Map<const Eigen::VectorXd> b(xp.data(), static_cast<Eigen::Index>(xp.size()));
  return eval_rows(spec, a, b);
}

GramMatrix gram(const KernelSpec& spec, const Eigen::MatrixXd& points) {
  spec.validate();
  const Eigen::Index n = points.rows();
  if (n == 0) throw KernelError("gram: empty point set");
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index s = 0; s < n; ++s) {
    for (Eigen::Index t = s; t < n; ++t) {
      const double v = (s == t && spec.kind == KernelSpec::Kind::rbf)
                           ? 1.0
                           : eval_rows(spec, points.row(s), points.row(t));
      k(s, t) = v;
      k(t, s) = v;
    }
  }
  return GramMatrix(spec, std::move(k));
}

Eigen::MatrixXd cross_gram(const KernelSpec& spec, const Eigen::MatrixXd& queries,
                           const Eigen::MatrixXd& points) {
  spec.validate();
  if (queries.rows() > 0 && points.rows() > 0 && queries.cols() != points.cols())
    throw KernelError("cross_gram: dimension mismatch");
  Eigen::MatrixXd k(queries.rows(), points.rows());
  for (Eigen::Index r = 0; r < queries.rows(); ++r)
    for (Eigen::Index c = 0; c < points.rows(); ++c) k(r, c) = eval_rows(spec, queries.row(r), points.row(c));
  return k;
}

Eigen::MatrixXd GramMatrix::slice(std::span<const std::size_t> idx) const { return block(idx, idx); }

Eigen::MatrixXd GramMatrix::block(std::span<const std::size_t> rows, std::span<const std::size_t> cols) const {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < cols.size(); ++c)
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          entries_(static_cast<Eigen::Index>(rows[r]), static_cast<Eigen::Index>(cols[c]));
  return out;
}

}  // namespace csvm
