#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "csvm/dataset.hpp"
#include "csvm/kernel.hpp"
#include "csvm/metrics.hpp"
#include "csvm/qp.hpp"

namespace csvm {

class SlideError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An SVM whose intercept is moved by `beta_shift`; the expansion
/// coefficients are those of `base`, untouched.
struct SlidingBetaModel {
  QpSolution base;
  double beta_shift = 0.0;
  std::vector<std::size_t> achieved;  // per constraint, on the reference set

  Eigen::VectorXd scores(const Eigen::MatrixXd& cross) const;
};

/// Margin added past the boundary so that the moved instance is strictly
/// on the correct side.
inline constexpr double kSlideMargin = 1e-9;

/// Smallest |shift| such that, with predictions sign(score + shift), every
/// constraint's count of correctly classified reference instances in its
/// scope reaches `required`. Constraints must all be TPR-type, all
/// TNR-type, or ACC. Throws SlideError for mixed directions or an
/// unreachable target.
double minimal_shift(std::span<const double> scores, std::span<const int> labels,
                     std::span<const CountConstraint> constraints);

/// Correct-count per constraint for the given shift.
std::vector<std::size_t> achieved_counts(std::span<const double> scores, std::span<const int> labels,
                                         std::span<const CountConstraint> constraints, double shift);

SlidingBetaModel slide_beta(const QpSolution& base, std::span<const double> reference_scores,
                            std::span<const int> reference_labels, std::span<const CountConstraint> constraints);

/// Class-weighted SVM with independent penalties.
QpSolution fit_weighted_svm(const Dataset& data, double c_plus, double c_minus, const KernelSpec& spec);

}  // namespace csvm
