#pragma once

// Interferogram synthesis and fixed-period sinusoid fitting.
//
// A scan records counts behind G3 at lateral positions z. The model is
//   S(z) = background + offset * (1 + V sin(2 pi z / d + phase)),
// so V = (S_max - S_min) / (S_max + S_min) once the background is removed.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <vector>

namespace kdtl {

class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FringeScan {
  std::vector<double> positions_nm;
  std::vector<std::int64_t> counts;
  double background = 0.0;  // detector dark level, counts per dwell
  double period_nm = 266.0;

  /// Throws std::domain_error on size mismatch, non-monotone positions,
  /// negative counts or background, or a non-positive period.
  void validate() const;
};

struct VisibilityResult {
  double visibility = 0.0;
  double phase = 0.0;       // rad, in [0, 2 pi)
  double mean_level = 0.0;  // fitted offset including background
  double amplitude = 0.0;   // fitted sinusoid amplitude, counts
  double uncertainty = 0.0;  // 1 sigma on visibility

  double s_max() const { return mean_level + amplitude; }
  double s_min() const { return mean_level - amplitude; }
};

/// Evenly spaced positions starting at 0, `points` per `periods` periods.
std::vector<double> scan_positions(int points, double periods, double period_nm);

/// Poisson counts around the model above. Throws std::domain_error unless
/// 0 <= V <= 1, mean_counts > 0 and background >= 0.
FringeScan synthesize_scan(double true_visibility, double period_nm, double phase,
                           double mean_counts, double background,
                           std::span<const double> positions_nm, std::uint64_t seed);

/// Weighted linear least squares on {1, sin(2 pi z/d), cos(2 pi z/d)} with
/// weights 1/max(count, 1). Throws FitError with fewer than 4 points, a span
/// under half a period, a singular design or a fitted level at or below the
/// background. The reported visibility is amplitude / (level - background)
/// capped at 1; amplitude itself is not capped.
VisibilityResult fit_scan(const FringeScan& scan);

struct FitEnsembleSummary {
  int seeds = 0;
  double mean_visibility = 0.0;
  double empirical_sigma = 0.0;      // spread of fitted V across seeds
  double mean_reported_sigma = 0.0;  // average fit uncertainty
};

/// Repeats synthesize -> fit for seeds base_seed .. base_seed + seeds - 1.
FitEnsembleSummary fit_ensemble(double true_visibility, double period_nm, double phase,
                                double mean_counts, double background,
                                std::span<const double> positions_nm, int seeds,
                                std::uint64_t base_seed);

/// Text form:
///   # period_nm = 266
///   # background = 50
///   z [nm],counts [1]
///   0,312
void write_scan(std::ostream& out, const FringeScan& scan);
FringeScan read_scan(std::istream& in);
FringeScan read_scan(const std::filesystem::path& path);

}  // namespace kdtl
