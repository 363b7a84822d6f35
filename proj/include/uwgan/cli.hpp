#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "uwgan/datasets.hpp"
#include "uwgan/metrics.hpp"
#include "uwgan/training.hpp"

namespace uwgan {

enum ExitCode : int {
  kExitOk = 0,
  kExitValidation = 1,
  kExitDivergence = 2,
  kExitIo = 3,
};

/// Dataset synthesis settings as they appear in the config file.
struct DatasetConfig {
  std::string types = "b,c,d";
  std::vector<double> mixture;  // empty: equal shares
  int64_t count = 200;
  double test_fraction = 0.0;
  int64_t resolution = 256;
  DepthNormalization depth_normalization;
  double depth_scale = 1.0;
  std::string clipping = "export_only";

  nlohmann::json to_json() const;
  static DatasetConfig from_json(const nlohmann::json& j);
  static DatasetConfig from_json(const nlohmann::json& j, DatasetConfig base);
};

/// Everything a command needs; written verbatim beside every run's outputs.
struct RunConfig {
  uint64_t seed = 0;
  DatasetConfig dataset;
  TrainConfig train;
  MetricsConfig metrics;

  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);
  static RunConfig from_json(const nlohmann::json& j, RunConfig base);
  static RunConfig load(const std::filesystem::path& path);
};

std::vector<WaterTypeSpec> parse_water_types(const std::string& list);

/// Runs one subcommand (`synthesize | train | enhance | evaluate | ablate`).
/// `args` excludes the program name. Returns a process exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace uwgan
