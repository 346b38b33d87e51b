#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "rvts/config.hpp"
#include "rvts/models.hpp"
#include "rvts/tailmeasure.hpp"

namespace rvts::runner {

inline constexpr const char* kVersion = "0.1.0";

// Output directory used when the config has no run.output: $RVTS_OUTPUT_DIR,
// else ./rvts-out.
std::string default_output_dir();

struct ExperimentConfig {
  config::Document doc;
  starspace::SpaceHandle space;
  std::optional<models::ModelSpec> model;
  std::string model_section;  // "model" or "models.<name>"
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::optional<std::size_t> burn_in;
  std::optional<std::string> input;  // external path CSV instead of simulation
  std::vector<std::string> tasks;
  std::string output_dir;
  tailmeasure::ThresholdRule threshold;

  // Resolves blocks and type-checks every task's parameters; throws
  // ConfigError naming the offending field.
  static ExperimentConfig from(const config::Document& doc);
};

ExperimentConfig load(const std::string& path, const std::vector<std::string>& overrides = {});

struct TaskRecord {
  std::string name;
  std::string status;  // ok, failed, skipped
  std::vector<std::string> outputs;
  double wall_time = 0.0;
  std::string error;
  nlohmann::json summary = nlohmann::json::object();
};

struct RunReport {
  std::vector<TaskRecord> tasks;
  std::uint64_t seed = 0;
  std::string version = kVersion;
  std::string config_hash;
  std::string output_dir;
  double wall_time = 0.0;
  bool ok = true;

  nlohmann::json to_json() const;
};

// Executes the tasks in order and writes report.json. A failing task marks
// the rest as skipped; the partial report is still written.
RunReport run(const ExperimentConfig& config);

}  // namespace rvts::runner
