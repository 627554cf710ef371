#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>

namespace csvm {

enum class RateKind { tpr, tnr, acc };

std::string to_string(RateKind kind);
RateKind parse_rate(const std::string& text);

/// User requirement "rate >= p0" before the confidence adjustment.
struct PerformanceTarget {
  RateKind rate = RateKind::tpr;
  double p0 = 0.5;
  double alpha = 0.05;  // type-I error of the one-sided test
  double delta = 0.025; // uplift added to p0 (capped at 1)

  /// min{1, p0 + delta}
  double uplifted() const;
};

/// Integer form of a rate bound over the anchor scope:
/// sum_{j in scope} z_j >= required.
struct CountConstraint {
  RateKind rate = RateKind::tpr;
  std::size_t required = 0;
  std::size_t scope_size = 1;
  double p_star = 0.0;
  bool clipped = false;  // p_star * scope exceeded the scope size
};

struct RateReport {
  double tpr = 1.0, tnr = 1.0, acc = 1.0, gmean = 1.0;
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  bool no_positives = false;  // tpr defaulted to 1
  bool no_negatives = false;  // tnr defaulted to 1
  std::size_t ties = 0;       // zero scores resolved by coin

  double rate(RateKind kind) const;
};

/// min{1, p0 + delta} + sqrt(log(alpha) / (-2n)). May exceed 1.
double hoeffding_threshold(const PerformanceTarget& target, std::size_t n);

/// required = min(scope, ceil(p_star * scope)); 0 when p_star <= 0.
CountConstraint count_target(double p_star, std::size_t scope_size, RateKind rate = RateKind::tpr);

/// Predictions are sign(score); exact zeros are resolved by a seeded coin.
RateReport evaluate(std::span<const double> scores, std::span<const int> labels, std::uint64_t seed = 0);

}  // namespace csvm
