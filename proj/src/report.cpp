#include "csvm/report.hpp"

#include <cstdio>
#include <sstream>

namespace csvm {

namespace {

std::string fixed(double v, int digits = 3) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

nlohmann::json to_json(const Stat& s) { return {{"mean", s.mean}, {"std", s.std}, {"n", s.n}}; }

bool has_target(Method m) { return m == Method::sliding_beta || m == Method::csvm; }

}  // namespace

nlohmann::json to_json(const RateReport& r) {
  return {{"tpr", r.tpr}, {"tnr", r.tnr}, {"acc", r.acc}, {"gmean", r.gmean}, {"tp", r.tp},
          {"fp", r.fp},   {"tn", r.tn},   {"fn", r.fn},   {"ties", r.ties}};
}

nlohmann::json to_json(const Candidate& c) {
  return {{"C", c.C}, {"gamma", c.gamma}, {"c_plus", c.c_plus}, {"c_minus", c.c_minus}};
}

nlohmann::json to_json(const CsvmFit& fit) {
  nlohmann::json j = {{"status", fit.status},     {"objective", fit.objective}, {"gap", fit.gap},
          {"nodes", fit.nodes},       {"p_star", fit.p_star},       {"required", fit.required},
          {"scope", fit.scope},       {"achieved", fit.achieved},   {"n_train", fit.n_train},
          {"n_anchor", fit.n_anchor}, {"message", fit.message},     {"passes_check", fit.passes_check}};
  if (!fit.diagnosis.empty()) j["diagnosis"] = fit.diagnosis;
  return j;
}

nlohmann::json to_json(const CvReport& report) {
  nlohmann::json j;
  j["dataset"] = report.dataset;
  const auto& cfg = report.config;
  j["plan"] = {{"outer_folds", report.plan.outer_folds},
               {"inner_folds", report.plan.inner_folds},
               {"selection", to_string(report.plan.selection)},
               {"seed", report.plan.seed}};
  j["grid"] = {{"C", report.grid.C},
               {"gamma", report.grid.gamma},
               {"c_plus", report.grid.c_plus},
               {"c_minus", report.grid.c_minus}};
  nlohmann::json methods = nlohmann::json::array();
  for (Method m : cfg.methods) methods.push_back(to_string(m));
  j["config"] = {{"kernel", cfg.kernel == KernelSpec::Kind::linear ? "linear" : "rbf"},
                 {"rate", to_string(cfg.target.rate)},
                 {"p0", cfg.target.p0 ? nlohmann::json(*cfg.target.p0) : nlohmann::json()},
                 {"delta", cfg.target.delta},
                 {"alpha", cfg.target.alpha},
                 {"methods", methods},
                 {"M1", cfg.M1},
                 {"M2", cfg.M2},
                 {"time_limit", cfg.time_limit},
                 {"inner_time_limit", cfg.inner_time_limit},
                 {"node_limit", cfg.node_limit},
                 {"tune_csvm", cfg.tune_csvm},
                 {"global_standardize", cfg.global_standardize},
                 {"compress_threshold", cfg.compress_threshold},
                 {"compress_fraction", cfg.compress_fraction}};
  j["notes"] = report.notes;

  nlohmann::json folds = nlohmann::json::array();
  for (const auto& f : report.folds) {
    nlohmann::json jf = {{"fold", f.fold},         {"n_train", f.n_train}, {"n_validation", f.n_validation},
                         {"compressed", f.compressed}, {"rate0", f.rate0},   {"p0", f.p0}};
    for (const auto& [m, mf] : f.methods) {
      nlohmann::json jm = {{"ok", mf.ok}, {"seconds", mf.seconds}};
      if (!mf.ok) jm["error"] = mf.error;
      else {
        jm["validation"] = to_json(mf.validation);
        jm["params"] = to_json(mf.params);
        if (has_target(m)) {
          jm["target"] = mf.target;
          jm["p_star"] = mf.p_star;
        }
        if (mf.csvm) jm["csvm"] = to_json(*mf.csvm);
      }
      jf["methods"][to_string(m)] = jm;
    }
    folds.push_back(jf);
  }
  j["folds"] = folds;

  for (const auto& [m, s] : report.summary) {
    nlohmann::json js = {{"tpr", to_json(s.tpr)},     {"tnr", to_json(s.tnr)},     {"acc", to_json(s.acc)},
                         {"gmean", to_json(s.gmean)}, {"failed_folds", s.failed_folds}};
    if (has_target(m)) js["target"] = to_json(s.target);
    j["summary"][to_string(m)] = js;
  }
  j["wall_seconds"] = report.wall_seconds;
  return j;
}

std::string table_text(const CvReport& report) {
  std::ostringstream out;
  out << "dataset " << (report.dataset.empty() ? "-" : report.dataset) << ", " << report.plan.outer_folds
      << " outer folds, target rate " << to_string(report.config.target.rate) << "\n";
  out << "cells: mean (std); target-driven " << to_string(report.config.target.rate)
      << " cells: mean (target) (std)\n\n";
  char line[256];
  std::snprintf(line, sizeof line, "%-14s %-24s %-24s %-24s %-24s %s\n", "method", "TPR", "TNR", "ACC", "G-mean",
                "failed");
  out << line;
  for (const auto& [m, s] : report.summary) {
    auto cell = [&](const Stat& st, bool target) {
      std::string c = fixed(st.mean);
      if (target) c += " (" + fixed(s.target.mean) + ")";
      return c + " (" + fixed(st.std) + ")";
    };
    const RateKind rk = report.config.target.rate;
    const bool t = has_target(m);
    std::snprintf(line, sizeof line, "%-14s %-24s %-24s %-24s %-24s %zu\n", to_string(m).c_str(),
                  cell(s.tpr, t && rk == RateKind::tpr).c_str(), cell(s.tnr, t && rk == RateKind::tnr).c_str(),
                  cell(s.acc, t && rk == RateKind::acc).c_str(), cell(s.gmean, false).c_str(), s.failed_folds);
    out << line;
  }
  for (const auto& n : report.notes) out << "note: " << n << "\n";
  return out.str();
}

std::string svm_rates_text(const CvReport& report, const std::string& negative_name,
                           const std::string& positive_name) {
  const auto it = report.summary.find(Method::svm);
  if (it == report.summary.end()) return "no standard SVM results\n";
  const MethodSummary& s = it->second;
  std::ostringstream out;
  out << "standard SVM, " << report.plan.outer_folds << "-fold CV: correctly classified, mean (std)\n";
  out << negative_name << ": " << fixed(100.0 * s.tnr.mean, 1) << "% (" << fixed(100.0 * s.tnr.std, 1) << ")\n";
  out << positive_name << ": " << fixed(100.0 * s.tpr.mean, 1) << "% (" << fixed(100.0 * s.tpr.std, 1) << ")\n";
  return out.str();
}

}  // namespace csvm
