#include "commands.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "csvm/csvm.hpp"
#include "csvm/harness.hpp"
#include "csvm/model_io.hpp"
#include "csvm/report.hpp"

namespace csvm::cli {

namespace {

using Clock = std::chrono::steady_clock;

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

std::filesystem::path prepare_out(const RunConfig& c) {
  std::filesystem::create_directories(c.out);
  return c.out;
}

std::vector<int> int_labels(const Dataset& d) {
  std::vector<int> y;
  for (const auto& x : d.instances()) y.push_back(x.label);
  return y;
}

RateReport rates_of(const Eigen::VectorXd& scores, const Dataset& d, std::uint64_t seed) {
  const std::vector<double> s(scores.data(), scores.data() + scores.size());
  return evaluate(s, int_labels(d), seed);
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

}  // namespace

const std::vector<RegistryEntry>& registry() {
  static const std::vector<RegistryEntry> r = [] {
    std::vector<RegistryEntry> v;
    v.push_back({"australian", "australian.csv", CsvSchema{"class", "1"}, "rejected", "approved"});
    CsvSchema german{"class", "2"};
    german.categorical_columns = {"A1", "A3", "A4", "A6", "A7", "A9", "A10", "A12", "A14", "A15", "A17", "A19", "A20"};
    v.push_back({"german", "german.csv", german, "good credit", "bad credit"});
    v.push_back({"pageblocks", "pageblocks.csv", CsvSchema{"class", "positive"}, "negative", "positive"});
    v.push_back({"votes", "votes.csv", CsvSchema{"party", "democrat"}, "republican", "democrat"});
    v.push_back({"wisconsin", "wisconsin.csv", CsvSchema{"diagnosis", "M"}, "benign", "malign"});
    v.push_back({"biodeg", "biodeg.csv", CsvSchema{"class", "RB"}, "not ready", "ready"});
    return v;
  }();
  return r;
}

std::filesystem::path data_dir() {
  if (const char* env = std::getenv("CSVM_DATA_DIR"); env && *env) return env;
  return CSVM_DEFAULT_DATA_DIR;
}

int cmd_train(const RunConfig& c) {
  require(!c.data.empty(), "train needs --data");
  require(!c.schema.label_column.empty() && !c.schema.positive_label.empty(),
          "train needs --label-col and --positive");
  const auto t0 = Clock::now();
  const HarnessConfig h = harness_config(c);
  const Dataset raw = load_csv(c.data, c.schema).data;
  const Standardization st = fit_standardization(raw);
  const Dataset data = apply_standardization(raw, st);

  // TPR0 (or the chosen rate) from cross-validating the standard SVM at
  // the given (C, gamma), unless p0 is supplied.
  double rate0 = 0.0;
  if (!c.p0) {
    FitContext ctx;
    ctx.config = &h;
    ctx.inner_folds = c.inner_folds.value_or(c.folds.value_or(5));
    ctx.seed = c.seed;
    GridSpec single{{c.C}, {c.gamma}, {1.0}, {1.0}};
    rate0 = tune_grid(data, single, Method::svm, ctx).mean_rates.rate(h.target.rate);
  }
  const double p0 = std::min(1.0, c.p0.value_or(rate0) + h.target.delta);
  const CsvmFit fit = fit_csvm(data, c.C, c.gamma, p0, h, h.time_limit, c.seed);

  const auto out = prepare_out(c);
  nlohmann::json report = to_json(fit);
  report["p0"] = p0;
  if (!c.p0) report["rate0_estimate"] = rate0;
  std::vector<std::string> outputs{"report.json", "manifest.json"};
  int code = kOk;
  if (fit.has_model) {
    SavedModel m;
    m.model = fit.model;
    m.standardization = st;
    m.z = fit.z;
    m.feature_names = raw.feature_names();
    m.schema = c.schema;
    m.info = {{"status", fit.status},
              {"C", num(c.C)},
              {"gamma", num(c.gamma)},
              {"rate", c.rate},
              {"p0", num(p0)},
              {"config_hash", config_hash(c)}};
    write_model(out / "model.txt", m);
    outputs.insert(outputs.begin(), "model.txt");
    report["training_rates"] = to_json(rates_of(fit.model.scores(data.feature_matrix()), data, c.seed));
    std::printf("%s: objective %.6g, gap %.3g, %zu nodes, %zu/%zu anchors in scope meet the target (need %zu)\n",
                fit.status.c_str(), fit.objective, fit.gap, fit.nodes, fit.achieved, fit.scope, fit.required);
  } else if (fit.status == to_string(SolveStatus::infeasible)) {
    code = kInfeasible;
    std::fprintf(stderr, "%s\ndiagnosis: %s\n", fit.message.c_str(), fit.diagnosis.c_str());
  } else {
    code = kNoIncumbent;
    std::fprintf(stderr, "%s: no integer-feasible model found within the limits. %s\n", fit.status.c_str(),
                 fit.message.c_str());
  }
  write_json(out / "report.json", report);
  nlohmann::json man = manifest(c, outputs);
  man["wall_seconds"] = std::chrono::duration<double>(Clock::now() - t0).count();
  write_json(out / "manifest.json", man);
  return code;
}

int cmd_predict(const RunConfig& c) {
  require(!c.model.empty(), "predict needs --model");
  require(!c.data.empty(), "predict needs --data");
  const SavedModel m = read_model(c.model);
  const LoadedCsv in = load_for_model(c.data, m);
  const Eigen::VectorXd s = score_rows(m, in.data);
  const auto out = prepare_out(c);
  {
    std::ofstream f(out / "predictions.csv");
    if (!f) throw std::runtime_error("cannot write predictions");
    f << "row,score,prediction\n";
    char buf[64];
    for (Eigen::Index i = 0; i < s.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", s(i));
      f << i << ',' << buf << ',' << (s(i) > 0 ? 1 : -1) << '\n';
    }
  }
  std::vector<std::string> outputs{"predictions.csv", "manifest.json"};
  if (in.has_labels) {
    const RateReport r = rates_of(s, in.data, c.seed);
    write_json(out / "report.json", to_json(r));
    outputs.insert(outputs.begin() + 1, "report.json");
    std::printf("TPR %.4f  TNR %.4f  ACC %.4f  G-mean %.4f\n", r.tpr, r.tnr, r.acc, r.gmean);
  } else {
    std::printf("%ld predictions (no labels in the input)\n", static_cast<long>(s.size()));
  }
  write_json(out / "manifest.json", manifest(c, outputs));
  return kOk;
}

int cmd_reproduce(const RunConfig& c) {
  const RegistryEntry* entry = nullptr;
  for (const auto& e : registry())
    if (e.name == c.dataset) entry = &e;
  if (!entry) {
    std::string names;
    for (const auto& e : registry()) names += " " + e.name;
    throw std::invalid_argument("unknown dataset '" + c.dataset + "'; known:" + names);
  }
  const std::filesystem::path path = c.data.empty() ? data_dir() / entry->file : c.data;
  if (!std::filesystem::exists(path))
    throw DataError(path.string() + " not found; place the " + entry->name + " CSV there or pass --data");
  CsvSchema schema = entry->schema;
  if (!c.schema.label_column.empty()) schema.label_column = c.schema.label_column;
  if (!c.schema.positive_label.empty()) schema.positive_label = c.schema.positive_label;
  if (!c.schema.categorical_columns.empty()) schema.categorical_columns = c.schema.categorical_columns;
  const Dataset data = load_csv(path, schema).data;

  CvPlan plan = CvPlan::for_dataset(data, c.seed);
  const CvPlan rule = plan;
  if (c.folds) plan.outer_folds = plan.inner_folds = *c.folds;
  if (c.inner_folds) plan.inner_folds = *c.inner_folds;
  if (c.selection == "accuracy") plan.selection = Selection::accuracy;
  else if (c.selection == "gmean") plan.selection = Selection::gmean;
  else require(c.selection == "auto", "selection must be auto, accuracy or gmean");
  const GridSpec grid = parse_grid(c.grid);
  const HarnessConfig h = harness_config(c);

  CvReport report = run_algorithm1(data, plan, grid, h);
  report.dataset = entry->name;
  // Settings that differ from the defaults.
  std::vector<std::string> notes;
  if (c.grid != "full") notes.push_back("grid '" + c.grid + "' instead of 2^(-5..5)");
  if (plan.outer_folds != rule.outer_folds)
    notes.push_back(std::to_string(plan.outer_folds) + " outer folds instead of " + std::to_string(rule.outer_folds));
  if (plan.inner_folds != rule.inner_folds)
    notes.push_back(std::to_string(plan.inner_folds) + " inner folds instead of " + std::to_string(rule.inner_folds));
  if (plan.selection != rule.selection) notes.push_back("selection by " + to_string(plan.selection));
  if (h.time_limit <= 0) notes.push_back("no time limit");
  else if (h.time_limit != 300.0) notes.push_back("time limit " + num(h.time_limit) + " s instead of 300 s");
  if (h.inner_time_limit != h.time_limit)
    notes.push_back("inner CSVM time limit " + num(h.inner_time_limit) + " s");
  if (h.node_limit) notes.push_back("node limit " + std::to_string(h.node_limit));
  if (!h.tune_csvm) notes.push_back("CSVM reuses the standard SVM's (C, gamma)");
  if (c.p0) notes.push_back("p0 fixed by the user");
  if (h.M1 != 100.0 || h.M2 != 100.0) notes.push_back("big-M constants changed");
  if (h.target.rate != RateKind::tpr || !h.target.extra_rates.empty()) notes.push_back("target rate " + c.rate);
  if (h.target.delta != 0.025 && !c.p0) notes.push_back("delta " + num(h.target.delta));
  if (h.target.alpha != 0.05) notes.push_back("alpha " + num(h.target.alpha));
  report.notes.insert(report.notes.begin(), notes.begin(), notes.end());

  const auto out = prepare_out(c);
  write_json(out / "report.json", to_json(report));
  std::string table = table_text(report);
  if (h.methods.size() == 1 && h.methods.front() == Method::svm)
    table = svm_rates_text(report, entry->negative_name, entry->positive_name) + "\n" + table;
  write_text(out / "table.txt", table);
  nlohmann::json man = manifest(c, {"report.json", "table.txt", "manifest.json"});
  man["wall_seconds"] = report.wall_seconds;
  write_json(out / "manifest.json", man);
  std::cout << table;
  std::size_t failed = 0;
  for (const auto& [m, s] : report.summary) failed += s.failed_folds;
  if (failed) std::fprintf(stderr, "%zu method-fold fits failed; see report.json\n", failed);
  return kOk;
}

int run(int argc, char** argv) {
  CLI::App app{"Constrained SVM: train, predict and cross-validate SVMs with rate targets"};
  app.set_version_flag("--version", std::string(CSVM_VERSION));
  app.set_config("--config", "", "key=value settings file; command-line flags win");
  app.require_subcommand(1);
  RunConfig c;

  app.add_option("--data", c.data, "CSV file");
  app.add_option("--label-col", c.schema.label_column, "Label column name");
  app.add_option("--positive", c.schema.positive_label, "Label value of the positive class");
  app.add_option("--categorical", c.schema.categorical_columns, "Columns to one-hot encode")->delimiter(',');
  app.add_option("--kernel", c.kernel, "rbf or linear")->check(CLI::IsMember({"rbf", "linear"}));
  app.add_option("--gamma", c.gamma, "RBF width")->check(CLI::PositiveNumber);
  app.add_option("--C", c.C, "Penalty C (C+ = C/|I+|, C- = C/|I-|)")->check(CLI::PositiveNumber);
  app.add_option("--rate", c.rate, "Target rate: tpr, tnr or acc; a comma list constrains several");
  app.add_option("--p0", c.p0, "Target rate before the Hoeffding adjustment")->check(CLI::Range(0.0, 1.0));
  app.add_option("--delta", c.delta, "Uplift added to p0 (default 0.025, or 0 with --p0)")->check(CLI::Range(0.0, 1.0));
  app.add_option("--alpha", c.alpha, "Hoeffding significance level")->check(CLI::Range(0.0, 1.0));
  app.add_option("--M1", c.M1, "Big-M of the anchor margin rows")->check(CLI::PositiveNumber);
  app.add_option("--M2", c.M2, "Big-M of the anchor coefficient bounds")->check(CLI::PositiveNumber);
  app.add_option("--time-limit", c.time_limit, "Seconds per branch-and-bound run (<= 0: none)");
  app.add_option("--inner-time-limit", c.inner_time_limit, "Seconds per CSVM run inside grid tuning");
  app.add_option("--node-limit", c.node_limit, "Branch-and-bound node limit (0: none)");
  app.add_flag("--prove", c.prove, "No time limit: run branch-and-bound to optimality");
  app.add_option("--folds", c.folds, "Outer (and inner) folds; default 10, or 5 above 1000 rows")
      ->check(CLI::Range(2, 1000));
  app.add_option("--inner-folds", c.inner_folds, "Inner folds")->check(CLI::Range(2, 1000));
  app.add_option("--grid", c.grid, "full, small, lo:hi or lo:hi:step (exponents of 2)");
  app.add_option("--selection", c.selection, "auto, accuracy or gmean")
      ->check(CLI::IsMember({"auto", "accuracy", "gmean"}));
  app.add_option("--method", c.methods, "Methods: svm, weighted_svm, sliding_beta, csvm")->delimiter(',');
  app.add_flag("!--no-tune-csvm", c.tune_csvm, "CSVM reuses the standard SVM's tuned (C, gamma)");
  app.add_option("--seed", c.seed, "Seed for folds, splits, clustering and tie coins");
  app.add_option("--out", c.out, "Output directory");
  app.add_flag("--global-standardize", c.global_standardize,
               "Fit standardization on the whole dataset (leaks validation statistics)");
  app.add_flag("--verbose", c.verbose, "Progress on stderr");
  app.add_option("--workers", c.workers, "Outer folds run in parallel")->check(CLI::Range(1, 1024));
  app.add_option("--compress-threshold", c.compress_threshold, "Compress training folds above this many rows");
  app.add_option("--compress-fraction", c.compress_fraction, "Clusters per class as a fraction of its rows")
      ->check(CLI::Range(0.0, 1.0));

  auto* train = app.add_subcommand("train", "Train one CSVM on a half/half split of the data");
  auto* predict = app.add_subcommand("predict", "Score a CSV with a saved model");
  predict->add_option("--model", c.model, "Model file written by train")->required();
  auto* reproduce = app.add_subcommand("reproduce", "Nested cross-validation of all methods on a named dataset");
  reproduce->add_option("dataset", c.dataset, "australian, german, pageblocks, votes, wisconsin or biodeg")->required();
  for (auto* sub : {train, predict, reproduce}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kError;
  }

  try {
    if (train->parsed()) {
      c.command = "train";
      return cmd_train(c);
    }
    if (predict->parsed()) {
      c.command = "predict";
      return cmd_predict(c);
    }
    c.command = "reproduce";
    return cmd_reproduce(c);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kError;
  }
}

}  // namespace csvm::cli
