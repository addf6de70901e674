#pragma once

// Command-line front end: prepare, fit, predict, simulate, diagnose.

#include <cstdint>
#include <exception>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "egpd/data.hpp"
#include "egpd/model.hpp"

namespace egpd {

// Overrides the output directory from the config file (command-line flags
// still win).
inline constexpr const char* kOutputDirEnv = "EGPD_OUTPUT_DIR";

enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitData = 2, kExitNumerical = 3 };

struct RunConfig {
  std::vector<std::string> inputs;
  CsvFormat format;
  int resolution_minutes = 6;
  PrepareOptions prepare;
  double train_fraction = 0.6;
  std::uint64_t seed = 1;

  std::string train;       // empty: <output_dir>/train.csv
  std::string validation;  // empty: <output_dir>/validation.csv when present
  std::vector<std::string> families{"egpd1"};
  std::vector<std::string> variations{"M.0"};
  std::map<std::string, std::string> links;  // parameter name -> link name
  GridOptions grid;
  FitControl control;

  std::string output_dir = "egpd_out";
};

nlohmann::json config_to_json(const RunConfig& config);
// Starts from the defaults; ConfigError on unknown keys or bad values.
RunConfig config_from_json(const nlohmann::json& j);
RunConfig load_config(const std::filesystem::path& path);

// Every (family, variation) pair of the config with its links applied.
// Validates all names before anything is fitted.
std::vector<ModelSpec> grid_specs(const RunConfig& config);

int exit_code_for(const std::exception& e);

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace egpd
