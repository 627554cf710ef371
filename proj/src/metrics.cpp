#include "csvm/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "csvm/rng.hpp"

namespace csvm {

std::string to_string(RateKind kind) {
  switch (kind) {
    case RateKind::tpr: return "tpr";
    case RateKind::tnr: return "tnr";
    case RateKind::acc: return "acc";
  }
  return "?";
}

RateKind parse_rate(const std::string& text) {
  std::string t = text;
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
  if (t == "tpr") return RateKind::tpr;
  if (t == "tnr") return RateKind::tnr;
  if (t == "acc") return RateKind::acc;
  throw std::invalid_argument("unknown rate '" + text + "' (expected tpr, tnr or acc)");
}

double PerformanceTarget::uplifted() const { return std::min(1.0, p0 + delta); }

double RateReport::rate(RateKind kind) const {
  switch (kind) {
    case RateKind::tpr: return tpr;
    case RateKind::tnr: return tnr;
    case RateKind::acc: return acc;
  }
  return 0.0;
}

double hoeffding_threshold(const PerformanceTarget& target, std::size_t n) {
  if (!(target.alpha > 0.0 && target.alpha <= 1.0))
    throw std::invalid_argument("alpha must lie in (0, 1]");
  if (n == 0) throw std::invalid_argument("hoeffding_threshold: n must be positive");
  return target.uplifted() + std::sqrt(-std::log(target.alpha) / (2.0 * static_cast<double>(n)));
}

CountConstraint count_target(double p_star, std::size_t scope_size, RateKind rate) {
  if (scope_size == 0) throw std::invalid_argument("count_target: empty scope");
  CountConstraint c;
  c.rate = rate;
  c.scope_size = scope_size;
  c.p_star = p_star;
  if (!(p_star > 0.0)) return c;
  // The 1e-9 slack keeps decimal thresholds such as 0.9 * 10 from rounding up.
  const double exact = std::ceil(p_star * static_cast<double>(scope_size) - 1e-9);
  if (exact > static_cast<double>(scope_size)) {
    c.required = scope_size;
    c.clipped = true;
  } else {
    c.required = static_cast<std::size_t>(std::max(0.0, exact));
  }
  return c;
}

RateReport evaluate(std::span<const double> scores, std::span<const int> labels, std::uint64_t seed) {
  if (scores.size() != labels.size()) throw std::invalid_argument("evaluate: length mismatch");
  if (scores.empty()) throw std::invalid_argument("evaluate: empty input");
  Rng coin(seed);
  RateReport r;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    int pred;
    if (scores[i] > 0.0) {
      pred = 1;
    } else if (scores[i] < 0.0) {
      pred = -1;
    } else {
      pred = coin.coin() ? 1 : -1;
      ++r.ties;
    }
    if (labels[i] > 0) {
      (pred > 0 ? r.tp : r.fn) += 1;
    } else {
      (pred < 0 ? r.tn : r.fp) += 1;
    }
  }
  const std::size_t pos = r.tp + r.fn;
  const std::size_t neg = r.tn + r.fp;
  r.no_positives = pos == 0;
  r.no_negatives = neg == 0;
  r.tpr = pos ? static_cast<double>(r.tp) / static_cast<double>(pos) : 1.0;
  r.tnr = neg ? static_cast<double>(r.tn) / static_cast<double>(neg) : 1.0;
  r.acc = static_cast<double>(r.tp + r.tn) / static_cast<double>(scores.size());
  r.gmean = std::sqrt(r.tpr * r.tnr);
  return r;
}

}  // namespace csvm
