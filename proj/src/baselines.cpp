#include "csvm/baselines.hpp"

#include <algorithm>
#include <cmath>

namespace csvm {

namespace {

struct Sorted {
  std::vector<double> pos, neg;  // ascending
};

Sorted sort_scores(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw std::invalid_argument("slide_beta: scores and labels differ in length");
  Sorted s;
  for (std::size_t i = 0; i < scores.size(); ++i) (labels[i] > 0 ? s.pos : s.neg).push_back(scores[i]);
  std::sort(s.pos.begin(), s.pos.end());
  std::sort(s.neg.begin(), s.neg.end());
  return s;
}

// Correct positives: score + shift > 0. Correct negatives: score + shift < 0.
std::size_t correct_pos(const Sorted& s, double shift) {
  const auto it = std::upper_bound(s.pos.begin(), s.pos.end(), 0.0, [&](double, double v) { return v + shift > 0.0; });
  return static_cast<std::size_t>(s.pos.end() - it);
}
std::size_t correct_neg(const Sorted& s, double shift) {
  const auto it = std::lower_bound(s.neg.begin(), s.neg.end(), 0.0, [&](double v, double) { return v + shift < 0.0; });
  return static_cast<std::size_t>(it - s.neg.begin());
}

std::size_t correct(const Sorted& s, RateKind kind, double shift) {
  switch (kind) {
    case RateKind::tpr: return correct_pos(s, shift);
    case RateKind::tnr: return correct_neg(s, shift);
    case RateKind::acc: return correct_pos(s, shift) + correct_neg(s, shift);
  }
  return 0;
}

bool feasible(const Sorted& s, std::span<const CountConstraint> constraints, double shift) {
  for (const auto& c : constraints)
    if (correct(s, c.rate, shift) < c.required) return false;
  return true;
}

}  // namespace

Eigen::VectorXd SlidingBetaModel::scores(const Eigen::MatrixXd& cross) const {
  return decision_scores(base, cross).array() + beta_shift;
}

std::vector<std::size_t> achieved_counts(std::span<const double> scores, std::span<const int> labels,
                                         std::span<const CountConstraint> constraints, double shift) {
  const Sorted s = sort_scores(scores, labels);
  std::vector<std::size_t> out;
  for (const auto& c : constraints) out.push_back(correct(s, c.rate, shift));
  return out;
}

double minimal_shift(std::span<const double> scores, std::span<const int> labels,
                     std::span<const CountConstraint> constraints) {
  bool has_tpr = false, has_tnr = false;
  for (const auto& c : constraints) {
    has_tpr |= c.rate == RateKind::tpr;
    has_tnr |= c.rate == RateKind::tnr;
  }
  if (has_tpr && has_tnr) throw SlideError("sliding the intercept cannot serve TPR and TNR targets at once");

  const Sorted s = sort_scores(scores, labels);
  for (const auto& c : constraints) {
    const std::size_t avail = c.rate == RateKind::tpr ? s.pos.size() : c.rate == RateKind::tnr ? s.neg.size()
                                                                                               : scores.size();
    if (c.required > avail) throw SlideError("target exceeds the reference scope");
  }
  if (feasible(s, constraints, 0.0)) return 0.0;

  // The correct-count is piecewise constant in the shift, changing only at
  // -score; candidates sit just past each breakpoint.
  std::vector<double> candidates;
  candidates.reserve(2 * scores.size());
  for (double v : scores) {
    candidates.push_back(-v + kSlideMargin);
    candidates.push_back(-v - kSlideMargin);
  }
  std::sort(candidates.begin(), candidates.end(), [](double a, double b) {
    return std::abs(a) != std::abs(b) ? std::abs(a) < std::abs(b) : a < b;
  });
  for (double t : candidates)
    if (feasible(s, constraints, t)) return t;
  throw SlideError("no intercept shift reaches the targets");
}

SlidingBetaModel slide_beta(const QpSolution& base, std::span<const double> reference_scores,
                            std::span<const int> reference_labels, std::span<const CountConstraint> constraints) {
  SlidingBetaModel m;
  m.base = base;
  m.beta_shift = minimal_shift(reference_scores, reference_labels, constraints);
  m.achieved = achieved_counts(reference_scores, reference_labels, constraints, m.beta_shift);
  return m;
}

QpSolution fit_weighted_svm(const Dataset& data, double c_plus, double c_minus, const KernelSpec& spec) {
  return solve_standard_svm(data, PenaltyConfig::independent(c_plus, c_minus), spec);
}

}  // namespace csvm
