#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "csvm/csvm.hpp"
#include "csvm/dataset.hpp"
#include "csvm/kernel.hpp"
#include "csvm/qp.hpp"
#include "csvm/rng.hpp"

namespace testing {

inline std::filesystem::path data_file(const std::string& name) { return std::filesystem::path(CSVM_DATA_DIR) / name; }

/// Scratch directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    csvm::Rng rng(std::hash<std::string>{}(tag) ^ reinterpret_cast<std::uintptr_t>(this));
    path_ = std::filesystem::temp_directory_path() / ("csvm_" + tag + "_" + std::to_string(rng.next() % 1000000));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path write(const std::string& name, const std::string& content) const {
    const auto p = path_ / name;
    std::ofstream(p) << content;
    return p;
  }

 private:
  std::filesystem::path path_;
};

/// Two Gaussian blobs centred at +-shift along every axis.
inline csvm::Dataset blobs(std::size_t n_pos, std::size_t n_neg, std::size_t dim, double shift, csvm::Rng& rng) {
  std::vector<csvm::Instance> inst;
  for (std::size_t i = 0; i < n_pos + n_neg; ++i) {
    const int label = i < n_pos ? 1 : -1;
    csvm::Instance x;
    x.label = label;
    for (std::size_t d = 0; d < dim; ++d) x.features.push_back(rng.normal() + label * shift);
    inst.push_back(std::move(x));
  }
  return csvm::Dataset(std::move(inst), dim);
}

/// Representer-form problem on the first n_train points of `data` (I) and
/// the rest (J). All anchors relaxed, no counts.
inline csvm::QpProblem make_problem(const csvm::Dataset& data, std::size_t n_train, const csvm::KernelSpec& spec,
                                    double C) {
  csvm::QpProblem p;
  p.gram = csvm::gram(spec, data.feature_matrix()).entries();
  p.labels = data.labels();
  p.n_train = n_train;
  p.n_anchor = data.size() - n_train;
  const Eigen::VectorXd yi = p.labels.head(static_cast<Eigen::Index>(n_train));
  double pos = 0, neg = 0;
  for (Eigen::Index i = 0; i < yi.size(); ++i) (yi(i) > 0 ? pos : neg) += 1.0;
  const double cp = pos > 0 ? C / pos : C, cm = neg > 0 ? C / neg : C;
  p.penalty = csvm::slack_penalties(yi, Eigen::VectorXd::Ones(yi.size()), cp, cm);
  return p;
}

/// Random labelled sample where both classes appear in the first n_train
/// points and in the rest.
inline csvm::Dataset random_sample(std::size_t n_train, std::size_t n_anchor, std::size_t dim, double shift,
                                   csvm::Rng& rng) {
  std::vector<csvm::Instance> inst;
  const std::size_t n = n_train + n_anchor;
  for (std::size_t i = 0; i < n; ++i) {
    csvm::Instance x;
    if (i == 0 || i == n_train) x.label = 1;
    else if (i == 1 || i == n_train + 1) x.label = -1;
    else x.label = rng.coin() ? 1 : -1;
    for (std::size_t d = 0; d < dim; ++d) x.features.push_back(rng.normal() + x.label * shift);
    inst.push_back(std::move(x));
  }
  return csvm::Dataset(std::move(inst), dim);
}


/// Minimum over every 0/1 anchor vector that meets the count rows, each
/// solved as a fixed-z QP. nullopt when none is feasible.
inline std::optional<double> enumerate_objective(const csvm::CsvmProblem& p) {
  const std::size_t nJ = p.qp.n_anchor;
  std::optional<double> best;
  for (std::size_t mask = 0; mask < (std::size_t{1} << nJ); ++mask) {
    csvm::QpProblem q = p.qp;
    q.status.resize(nJ);
    bool ok = true;
    for (const auto& c : q.counts) {
      std::size_t s = 0;
      for (auto j : c.scope) s += (mask >> j) & 1;
      ok &= s >= c.required;
    }
    if (!ok) continue;
    for (std::size_t j = 0; j < nJ; ++j)
      q.status[j] = ((mask >> j) & 1) ? csvm::AnchorStatus::fixed_one : csvm::AnchorStatus::fixed_zero;
    const auto s = csvm::solve_qp(q, nullptr, p.node_tol);
    if (s.status != csvm::QpStatus::optimal) continue;
    if (!best || s.objective < *best) best = s.objective;
  }
  return best;
}

/// Random CSVM instance with one TPR count over the positive anchors.
inline csvm::CsvmProblem random_csvm(std::size_t nI, std::size_t nJ, double p_star, csvm::Rng& rng,
                                     const csvm::KernelSpec& spec) {
  const csvm::Dataset d = random_sample(nI, nJ, 2, 0.3 + 0.7 * rng.uniform(), rng);
  const Eigen::VectorXd y = d.labels();
  const Eigen::VectorXd yj = y.tail(static_cast<Eigen::Index>(nJ));
  const auto scope = csvm::anchor_scope(csvm::RateKind::tpr, yj);
  const csvm::CountConstraint c = csvm::count_target(p_star, scope.size(), csvm::RateKind::tpr);
  double pos = 0, neg = 0;
  for (std::size_t i = 0; i < nI; ++i) (d[i].label > 0 ? pos : neg) += 1;
  const double C = std::pow(2.0, rng.uniform(-2, 4));
  return csvm::make_csvm_problem(csvm::gram(spec, d.feature_matrix()).entries(), y,
                                 Eigen::VectorXd::Ones(static_cast<Eigen::Index>(nI)), nI, C / pos, C / neg,
                                 std::span<const csvm::CountConstraint>(&c, 1), spec);
}

/// n points on a line, classes interleaved in the middle.
inline csvm::Dataset overlapping_line(std::size_t n) {
  std::vector<csvm::Instance> inst;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = static_cast<double>(i) / static_cast<double>(n);
    int label = x < 0.5 ? -1 : 1;
    if (i % 5 == 2) label = -label;
    inst.push_back(csvm::Instance{{x, 0.0}, label, 1.0});
  }
  return csvm::Dataset(std::move(inst), 2);
}

/// Every positive and every negative anchor of J must be correct.
inline csvm::CsvmProblem two_sided(const csvm::Dataset& d, std::size_t nI, const csvm::KernelSpec& spec) {
  const Eigen::VectorXd y = d.labels();
  const Eigen::VectorXd yj = y.tail(static_cast<Eigen::Index>(d.size() - nI));
  std::vector<csvm::CountConstraint> cs;
  for (csvm::RateKind r : {csvm::RateKind::tpr, csvm::RateKind::tnr})
    cs.push_back(csvm::count_target(1.0, csvm::anchor_scope(r, yj).size(), r));
  return csvm::make_csvm_problem(csvm::gram(spec, d.feature_matrix()).entries(), y,
                                 Eigen::VectorXd::Ones(static_cast<Eigen::Index>(nI)), nI, 1.0, 1.0, cs, spec);
}

}  // namespace testing
