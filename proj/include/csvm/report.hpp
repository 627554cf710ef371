#pragma once

#include <string>

#include <json.hpp>

#include "csvm/harness.hpp"

namespace csvm {

nlohmann::json to_json(const RateReport& r);
nlohmann::json to_json(const Candidate& c);
nlohmann::json to_json(const CsvmFit& fit);
/// Full report tree: settings, notes, per-fold detail and the summary.
nlohmann::json to_json(const CvReport& report);

/// One row per method and one column per rate, each cell "mean (std)";
/// the TPR cell of target-driven methods reads "mean (target) (std)".
std::string table_text(const CvReport& report);

/// Two-row summary of the standard SVM: negative-class rate (TNR) and
/// positive-class rate (TPR), in percent with the std in parentheses.
std::string svm_rates_text(const CvReport& report, const std::string& negative_name = "negative",
                           const std::string& positive_name = "positive");

}  // namespace csvm
