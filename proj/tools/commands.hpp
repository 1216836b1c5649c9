#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace lyapchain::cli {

/// Flag values that override the config file.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out;
  std::optional<int> threads;
  std::optional<double> wall_clock_minutes;
  bool timestamp = true;  ///< stamp the provenance line; tests switch it off
};

enum ExitCode { kComplete = 0, kUsage = 1, kFailed = 2 };

const std::vector<std::string>& commands();

/// Runs one command end to end: parse, compute, write CSV and summary.txt under the output
/// directory, print the summary to `log`. Never throws; the exit code says what happened.
int run(const std::string& command, const std::filesystem::path& config_path, const Overrides& overrides,
        std::ostream& log);

}  // namespace lyapchain::cli
