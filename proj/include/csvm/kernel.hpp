#pragma once

#include <span>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace csvm {

class KernelError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct KernelSpec {
  enum class Kind { linear, rbf };
  Kind kind = Kind::rbf;
  double gamma = 1.0;  // rbf only

  static KernelSpec linear() { return {Kind::linear, 0.0}; }
  static KernelSpec rbf(double gamma) { return {Kind::rbf, gamma}; }

  void validate() const;
  std::string name() const { return kind == Kind::linear ? "linear" : "rbf"; }
  static KernelSpec parse(const std::string& kind, double gamma);
};

/// Linear: <x, x'>. RBF: exp(-gamma * |x - x'|^2).
double kernel_eval(const KernelSpec& spec, std::span<const double> x, std::span<const double> xp);

/// Symmetric Gram matrix over the rows of a point matrix. Computed once and
/// shared read-only between solvers; callers slice it by index sets.
class GramMatrix {
 public:
  GramMatrix(KernelSpec spec, Eigen::MatrixXd entries) : spec_(spec), entries_(std::move(entries)) {}

  const KernelSpec& spec() const { return spec_; }
  const Eigen::MatrixXd& entries() const { return entries_; }
  Eigen::Index size() const { return entries_.rows(); }
  double operator()(Eigen::Index s, Eigen::Index t) const { return entries_(s, t); }

  /// Principal submatrix on the given indices (in that order).
  Eigen::MatrixXd slice(std::span<const std::size_t> idx) const;
  /// Rectangular block rows x cols.
  Eigen::MatrixXd block(std::span<const std::size_t> rows, std::span<const std::size_t> cols) const;

 private:
  KernelSpec spec_;
  Eigen::MatrixXd entries_;
};

/// Rows of `points` are the instances.
GramMatrix gram(const KernelSpec& spec, const Eigen::MatrixXd& points);

/// K(queries[r], points[c]) for every pair.
Eigen::MatrixXd cross_gram(const KernelSpec& spec, const Eigen::MatrixXd& queries,
                           const Eigen::MatrixXd& points);

}  // namespace csvm
