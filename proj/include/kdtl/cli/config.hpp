#pragma once

// Experiment configuration: one JSON document with per-command sections.
// Command-line flags (--out, --seed, --model) override the file.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "kdtl/beam.hpp"
#include "kdtl/physics.hpp"

namespace kdtl::cli {

/// Invalid configuration. The message starts with the JSON field path.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& field, const std::string& what)
      : std::runtime_error(field + ": " + what), field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

struct LibraryMemberRef {
  std::filesystem::path library_file;
  int n = 0;
};

struct ExplicitFormula {
  std::string formula;
  std::optional<double> mass_amu;  // computed from the formula when absent
};

struct MoleculeSpec {
  std::variant<LibraryMemberRef, ExplicitFormula> source;
  double alpha_m3 = 0.0;
  double sigma_abs_m2 = 0.0;
};

struct AnalyticVelocity {
  double mean = 0.0;
  double fwhm = 0.0;
  int points = 401;
};

struct BeamVelocity {};  // take the distribution from the beam section

struct VisibilitySection {
  std::vector<double> powers_w;
  double velocity_shift = 5.0;  // m/s, for the +- bands
};

struct ScanSection {
  int points = 20;
  double periods = 1.0;
  double mean_counts = 250.0;
  double background = 50.0;
  double phase = 0.0;
  int ensemble_seeds = 0;  // 0 disables the seed-ensemble study
};

struct LibrarySection {
  std::filesystem::path file;
  std::optional<std::filesystem::path> peaks;
  double tolerance_amu = 15.0;
};

struct BeamSection {
  SourceConfig source;
  DelimiterGeometry geometry;
  std::size_t n_samples = 1'000'000;
  int histogram_bins = 64;
  double beam_area_mm2 = 1.0;
  double transmission = 1.0;
};

struct ExperimentConfig {
  std::string canonical_text;  // normalized JSON, hashed into the manifest
  std::filesystem::path base_dir;
  std::uint64_t seed = 1;
  std::filesystem::path output_dir = "out";
  VisibilityModel model = VisibilityModel::Quantum;

  std::optional<MoleculeSpec> molecule;
  std::optional<InterferometerSetup> setup;
  std::optional<std::variant<AnalyticVelocity, BeamVelocity>> velocity;
  std::optional<VisibilitySection> visibility;
  std::optional<ScanSection> scan;
  std::optional<LibrarySection> library;
  std::optional<BeamSection> beam;
};

struct Overrides {
  std::optional<std::filesystem::path> output_dir;
  std::optional<std::uint64_t> seed;
  std::optional<VisibilityModel> model;
};

/// Parses and validates a config file. Relative paths inside resolve
/// against the file's directory; referenced files must exist.
ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir);
void apply_overrides(ExperimentConfig& config, const Overrides& overrides);

/// Resolves the molecule section (library lookup, formula mass).
Molecule resolve_molecule(const ExperimentConfig& config);

}  // namespace kdtl::cli
