#include "csvm/run_config.hpp"

#include <algorithm>
#include <cstdio>
#include <stdexcept>

#include <Eigen/Core>

namespace csvm {

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (const auto& x : v) s += (s.empty() ? "" : ",") + x;
  return s;
}

}  // namespace

std::vector<std::pair<std::string, std::string>> canonical_settings(const RunConfig& c) {
  std::vector<std::pair<std::string, std::string>> kv{
      {"command", c.command},
      {"dataset", c.dataset},
      {"data", c.data.string()},
      {"model", c.model.string()},
      {"label-col", c.schema.label_column},
      {"positive", c.schema.positive_label},
      {"categorical", join(c.schema.categorical_columns)},
      {"kernel", c.kernel},
      {"gamma", num(c.gamma)},
      {"C", num(c.C)},
      {"rate", c.rate},
      {"p0", c.p0 ? num(*c.p0) : "estimated"},
      {"delta", num(c.effective_delta())},
      {"alpha", num(c.alpha)},
      {"M1", num(c.M1)},
      {"M2", num(c.M2)},
      {"time-limit", num(c.effective_time_limit())},
      {"inner-time-limit", num(c.effective_inner_time_limit())},
      {"node-limit", std::to_string(c.node_limit)},
      {"folds", c.folds ? std::to_string(*c.folds) : "auto"},
      {"inner-folds", c.inner_folds ? std::to_string(*c.inner_folds) : "auto"},
      {"grid", c.grid},
      {"selection", c.selection},
      {"method", c.methods.empty() ? "all" : join(c.methods)},
      {"tune-csvm", c.tune_csvm ? "true" : "false"},
      {"seed", std::to_string(c.seed)},
      {"global-standardize", c.global_standardize ? "true" : "false"},
      {"compress-threshold", std::to_string(c.compress_threshold)},
      {"compress-fraction", num(c.compress_fraction)},
  };
  std::sort(kv.begin(), kv.end());
  return kv;
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string config_hash(const RunConfig& c) {
  std::string text;
  for (const auto& [k, v] : canonical_settings(c)) text += k + "=" + v + "\n";
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(text)));
  return buf;
}

GridSpec parse_grid(const std::string& text) {
  if (text == "full") return GridSpec::full();
  if (text == "small") return GridSpec::small();
  int lo = 0, hi = 0, step = 1;
  char tail = 0;
  const int n = std::sscanf(text.c_str(), "%d:%d:%d%c", &lo, &hi, &step, &tail);
  if ((n != 2 && n != 3) || step < 1 || lo > hi)
    throw std::invalid_argument("grid must be full, small, lo:hi or lo:hi:step (got '" + text + "')");
  const auto axis = GridSpec::powers_of_two(lo, hi, step);
  return {axis, axis, axis, axis};
}

HarnessConfig harness_config(const RunConfig& c) {
  HarnessConfig h;
  h.kernel = KernelSpec::parse(c.kernel, c.kernel == "linear" ? 0.0 : 1.0).kind;
  std::string rest = c.rate;
  for (bool first = true; !rest.empty(); first = false) {
    const auto comma = rest.find(',');
    const RateKind r = parse_rate(rest.substr(0, comma));
    if (first) h.target.rate = r;
    else h.target.extra_rates.push_back(r);
    rest = comma == std::string::npos ? "" : rest.substr(comma + 1);
  }
  h.target.p0 = c.p0;
  h.target.delta = c.effective_delta();
  h.target.alpha = c.alpha;
  if (!c.methods.empty()) {
    h.methods.clear();
    for (const auto& m : c.methods) h.methods.push_back(parse_method(m));
  }
  h.M1 = c.M1;
  h.M2 = c.M2;
  h.time_limit = c.effective_time_limit();
  h.inner_time_limit = c.effective_inner_time_limit();
  h.node_limit = c.node_limit;
  h.tune_csvm = c.tune_csvm;
  h.global_standardize = c.global_standardize;
  h.compress_threshold = c.compress_threshold;
  h.compress_fraction = c.compress_fraction;
  h.workers = c.workers;
  h.verbose = c.verbose;
  h.validate();
  return h;
}

nlohmann::json manifest(const RunConfig& c, const std::vector<std::string>& outputs) {
  nlohmann::json settings = nlohmann::json::object();
  for (const auto& [k, v] : canonical_settings(c)) settings[k] = v;
  return {{"config_hash", config_hash(c)},
          {"seed", c.seed},
          {"workers", c.workers},
          {"versions",
           {{"csvm", CSVM_VERSION},
            {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                          std::to_string(EIGEN_MINOR_VERSION)},
            {"compiler", __VERSION__},
            {"json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." + std::to_string(NLOHMANN_JSON_VERSION_MINOR) +
                         "." + std::to_string(NLOHMANN_JSON_VERSION_PATCH)}}},
          {"settings", settings},
          {"outputs", outputs}};
}

}  // namespace csvm
