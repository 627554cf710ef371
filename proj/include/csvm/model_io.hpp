#pragma once

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "csvm/dataset.hpp"
#include "csvm/harness.hpp"

namespace csvm {

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A trained classifier with everything needed to score raw CSV rows.
struct SavedModel {
  KernelModel model;
  Standardization standardization;
  std::vector<int> z;  // anchor indicators, empty for plain SVMs
  std::vector<std::string> feature_names;
  CsvSchema schema;    // label column, labels and categorical columns
  std::map<std::string, std::string> info;

  std::size_t dimension() const { return feature_names.size(); }
};

/// Versioned text format: a "csvm-model 1" header, then named sections
/// (info, schema, kernel, features, standardization, z, support). Numbers
/// are written with 17 significant digits so a round trip is exact.
void write_model(const std::filesystem::path& path, const SavedModel& m);
SavedModel read_model(const std::filesystem::path& path);

/// Loads `path` with the model's schema and feature layout, labels optional.
LoadedCsv load_for_model(const std::filesystem::path& path, const SavedModel& m);

/// Standardizes with the stored parameters and scores the rows.
Eigen::VectorXd score_rows(const SavedModel& m, const Dataset& raw);

}  // namespace csvm
