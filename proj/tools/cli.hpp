#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

#include "tanet/trainer.hpp"

namespace tanet::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kUsage = 2,
  kInvalidArgument = 3,
  kConfigError = 4,
  kIoError = 5,
  kFormatError = 6,
  kNumericError = 7,
};

/// Runs one subcommand. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

nlohmann::json config_to_json(const TrainConfig& cfg);
/// Overlays the keys present in `j` onto `base`; unknown keys are rejected.
/// A run manifest is accepted too (its "config" object is used).
TrainConfig config_from_json(const nlohmann::json& j, TrainConfig base = {});

nlohmann::json metrics_to_json(const MetricsReport& report);
/// Two-row table, percentages with two decimals.
std::string metrics_table(const MetricsReport& report);

std::string sha256_file(const std::filesystem::path& path);

}  // namespace tanet::cli
