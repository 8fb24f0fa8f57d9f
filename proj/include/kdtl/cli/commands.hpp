#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "kdtl/cli/config.hpp"

namespace kdtl::cli {

inline constexpr std::string_view kVersion = "kdtl 1.0.0";

struct CommandResult {
  std::vector<std::filesystem::path> outputs;  // CSV and record files, manifest last
  std::vector<std::pair<std::string, std::string>> summary;

  /// Looks up a summary entry; throws std::out_of_range if absent.
  const std::string& get(std::string_view key) const;
};

/// Power curves (quantum, classical, quantum at mean velocity +- shift).
CommandResult cmd_visibility(const ExperimentConfig& config);
/// Averaged visibility -> synthetic interferogram -> sinusoid fit.
CommandResult cmd_scan(const ExperimentConfig& config);
/// Library member table and, when peaks are configured, peak assignments.
CommandResult cmd_library(const ExperimentConfig& config);
/// Gravitational velocity selection and flux/density estimate.
CommandResult cmd_beam(const ExperimentConfig& config);

/// Velocity distribution named by the config's velocity section.
VelocityDistribution resolve_velocity(const ExperimentConfig& config);

/// Entry point used by the kdtl executable. Exit codes: 0 success,
/// 2 configuration or usage error, 3 runtime error.
int run_cli(int argc, char** argv);

}  // namespace kdtl::cli
