#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "csvm/dataset.hpp"
#include "csvm/run_config.hpp"

namespace csvm::cli {

enum ExitCode : int { kOk = 0, kError = 1, kInfeasible = 2, kNoIncumbent = 3 };

/// A dataset the reproduce command knows by name.
struct RegistryEntry {
  std::string name;
  std::string file;
  CsvSchema schema;
  std::string negative_name, positive_name;  // for the rate summary
};
const std::vector<RegistryEntry>& registry();

/// Directory searched for registry files: $CSVM_DATA_DIR, else the
/// source tree's data/ at build time.
std::filesystem::path data_dir();

int cmd_train(const RunConfig& c);
int cmd_predict(const RunConfig& c);
int cmd_reproduce(const RunConfig& c);

/// Parses argv and dispatches; returns the process exit code.
int run(int argc, char** argv);

}  // namespace csvm::cli
