#pragma once

// Molecular-beam Monte Carlo: effusive source, gravitational velocity
// selection through three height delimiters, flux/density bookkeeping and a
// classical trajectory model of the interferometer.

#include <array>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "kdtl/physics.hpp"
#include "kdtl/rng.hpp"

namespace kdtl {

inline constexpr std::size_t kMinSelectionSamples = 10'000;
inline constexpr std::size_t kMinClassicalSamples = 100'000;

/// No launched trajectory clears all delimiters.
class BeamBlockedError : public std::runtime_error {
 public:
  BeamBlockedError() : std::runtime_error("geometry blocks beam") {}
};

struct SourceConfig {
  double temperature_k = 600.0;
  double molecule_mass_amu = 10123.0;
  double evaporated_mass_kg = 80e-6;
  double duration_s = 45.0 * 60.0;

  void validate() const;
};

struct Aperture {
  double position_m = 0.0;  // downstream distance from the source exit
  double center_m = 0.0;    // height of the opening centre
  double opening_m = 0.0;   // full height of the opening
};

/// The source exit is a point at the origin; heights are measured upward.
struct DelimiterGeometry {
  std::array<Aperture, 3> apertures;
  double detector_position_m = 0.0;

  /// Positions strictly increasing (detector last), openings positive.
  void validate() const;
};

struct TrajectorySample {
  double launch_velocity = 0.0;  // m/s
  double launch_angle = 0.0;     // rad, above horizontal
  std::array<bool, 3> passed{};

  bool transmitted() const { return passed[0] && passed[1] && passed[2]; }
};

/// Draws from the flux-weighted Maxwell distribution v^3 exp(-m v^2 / 2kT),
/// whose mode is sqrt(3kT/m). m v^2 / 2kT follows Gamma(2, 1).
double sample_effusive_velocity(double temperature_k, double mass_amu, Rng& rng);
std::vector<double> sample_effusive_velocities(double temperature_k, double mass_amu,
                                               std::size_t n, std::uint64_t seed);

/// Height of the flight parabola y(x) = tan(a) x - g x^2 / (2 v^2 cos^2 a).
double parabola_height(double velocity, double angle, double x);

TrajectorySample trace_trajectory(double velocity, double angle, const DelimiterGeometry& geom);

/// Launches n trajectories with effusive speeds and angles uniform over the
/// straight-line acceptance of the first delimiter, and traces each one.
std::vector<TrajectorySample> launch_trajectories(const SourceConfig& source,
                                                  const DelimiterGeometry& geom, std::size_t n,
                                                  std::uint64_t seed);

/// Unit-weight distribution of the transmitted velocities. Throws
/// std::domain_error below kMinSelectionSamples and BeamBlockedError when
/// nothing survives.
VelocityDistribution simulate_velocity_selection(const SourceConfig& source,
                                                 const DelimiterGeometry& geom,
                                                 std::size_t n_samples, std::uint64_t seed);

struct BeamEstimate {
  double flux_per_s = 0.0;
  double density_per_mm3 = 0.0;
  double spacing_um = 0.0;
};

/// flux = evaporated mass / (molecule mass * duration);
/// density = flux * transmission / (v * area); spacing = density^(-1/3).
BeamEstimate estimate_flux_density(const SourceConfig& source, double mean_velocity,
                                   double beam_area_mm2, double transmission);
double mean_spacing_um(double density_per_mm3);

struct ClassicalMcResult {
  double visibility = 0.0;
  double sigma = 0.0;  // 1 sigma, from the spread of independent shards
};

/// Classical shadow-image oracle. Particles start uniformly over a G1 slit
/// with transverse velocities spanning a whole number of grating periods at
/// G2, receive the thin-lens kick dv = (hbar/m) dPhi/dz at G2, fly on to G3,
/// and are counted through the G3 mask at evenly spaced scan positions over
/// one period. The contrast is the first-harmonic amplitude of that scan.
ClassicalMcResult classical_mc_visibility(const InterferometerSetup& setup,
                                          const Molecule& molecule, double velocity,
                                          std::size_t n_samples, std::uint64_t seed);

}  // namespace kdtl
