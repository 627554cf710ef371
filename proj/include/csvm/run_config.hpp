#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "csvm/dataset.hpp"
#include "csvm/harness.hpp"

namespace csvm {

/// Everything a CLI run depends on. Defaults: alpha 0.05, delta 0.025,
/// M1 = M2 = 100, 300 s per branch-and-bound.
struct RunConfig {
  std::string command;
  std::string dataset;  // reproduce: registry name
  std::filesystem::path data;
  std::filesystem::path model;  // predict input
  std::filesystem::path out = "csvm-out";
  CsvSchema schema;

  std::string kernel = "rbf";
  double gamma = 1.0;
  double C = 1.0;
  std::string rate = "tpr";  // comma list: the first is primary
  std::optional<double> p0;
  std::optional<double> delta;  // unset: 0.025, or 0 when p0 is given
  double alpha = 0.05;
  double M1 = 100.0, M2 = 100.0;
  double time_limit = 300.0;
  std::optional<double> inner_time_limit;  // unset: time_limit
  std::size_t node_limit = 0;
  bool prove = false;  // no time limit

  std::optional<std::size_t> folds, inner_folds;  // unset: size rule
  std::string grid = "full";
  std::string selection = "auto";
  std::vector<std::string> methods;  // empty: all
  bool tune_csvm = true;
  std::uint64_t seed = 1;
  bool global_standardize = false;
  std::size_t compress_threshold = 1000;
  double compress_fraction = 0.2;
  std::size_t workers = 1;
  bool verbose = false;

  double effective_delta() const { return delta.value_or(p0 ? 0.0 : 0.025); }
  /// Time limit after --prove (0 = none).
  double effective_time_limit() const { return prove ? 0.0 : time_limit; }
  double effective_inner_time_limit() const {
    return prove ? 0.0 : inner_time_limit.value_or(time_limit);
  }
};

/// Resolved settings as sorted key/value pairs; the basis of the hash.
std::vector<std::pair<std::string, std::string>> canonical_settings(const RunConfig& c);

std::uint64_t fnv1a(std::string_view bytes);
/// 16 hex digits of fnv1a over the canonical settings.
std::string config_hash(const RunConfig& c);

/// "full", "small", or "lo:hi" / "lo:hi:step" exponent ranges of 2.
GridSpec parse_grid(const std::string& text);

/// Harness settings derived from a run configuration.
HarnessConfig harness_config(const RunConfig& c);

/// Config hash, seed, versions and the resolved settings: enough to replay
/// the run in single-worker mode.
nlohmann::json manifest(const RunConfig& c, const std::vector<std::string>& outputs);

}  // namespace csvm
