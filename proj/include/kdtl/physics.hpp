#pragma once

// Closed-form model of a Kapitza-Dirac-Talbot-Lau interferometer: two
// material gratings (G1, G3) around a standing-light-wave phase grating (G2).
//
// Polarizability is carried as a volume alpha_vol (m^3). The SI
// polarizability is alpha_SI = 4 pi eps0 alpha_vol, and the maximum phase
//   phi0 = 8 sqrt(2 pi) alpha_vol P / (hbar c w_y v)
// is dimensionless in that form: m^3 W / (J s * m/s * m * m/s) = 1.

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "kdtl/composition.hpp"

namespace kdtl {

struct Molecule {
  Composition composition;  // may be empty for ad-hoc particles
  double mass_amu = 0.0;
  double alpha_m3 = 0.0;      // optical polarizability volume
  double sigma_abs_m2 = 0.0;  // absorption cross section at the laser wavelength

  /// Throws std::domain_error unless mass > 0, alpha >= 0, sigma >= 0.
  void validate() const;
};

struct InterferometerSetup {
  double period_m = 266e-9;
  double open_fraction = 110.0 / 266.0;  // slit width / period
  double separation_m = 0.105;           // G1-G2 = G2-G3
  double laser_wavelength_m = 532e-9;
  double laser_power_w = 1.0;
  double waist_x_m = 18e-6;   // along the beam
  double waist_y_m = 945e-6;  // along the grating slits

  /// Throws std::domain_error on non-physical geometry. The open fraction
  /// may sit on [0, 1]; the endpoints are degenerate, see
  /// degenerate_grating().
  void validate() const;
  InterferometerSetup with_power(double power_w) const;
};

/// Non-empty message when the open fraction leaves no usable fringes
/// (f <= 0 transmits nothing, f >= 1 has no mask). Visibilities are 0 then.
std::optional<std::string> degenerate_grating(const InterferometerSetup& setup);

enum class VisibilityModel { Quantum, Classical };

std::string_view to_string(VisibilityModel model);
/// Accepts "quantum" or "classical".
std::optional<VisibilityModel> parse_visibility_model(std::string_view text);

struct VelocitySample {
  double velocity = 0.0;  // m/s
  double weight = 0.0;
};

class VelocityDistribution {
 public:
  /// Throws std::domain_error unless samples are non-empty, velocities
  /// positive, weights non-negative with a positive sum.
  static VelocityDistribution from_samples(std::vector<VelocitySample> samples);
  static VelocityDistribution dirac(double velocity);
  /// Gaussian weights on a regular grid over mean +- span_sigmas sigma,
  /// truncated to positive velocities.
  static VelocityDistribution gaussian(double mean, double fwhm, int points = 401,
                                       double span_sigmas = 4.0);

  std::span<const VelocitySample> samples() const { return samples_; }
  std::size_t size() const { return samples_.size(); }
  double total_weight() const;
  double mean() const;
  double min_velocity() const;
  double max_velocity() const;

  /// Weighted histogram over [min, max] with linear (cloud-in-cell) binning.
  /// Returns (bin centre, weight) pairs.
  std::vector<std::pair<double, double>> histogram(int bins = 64) const;
  /// Full width at half maximum read off histogram(bins), with linear
  /// interpolation of the half-height crossings. Zero when fewer than two
  /// distinct velocities exist.
  double fwhm(int bins = 64) const;

  /// Every velocity shifted by dv. Throws if any would become non-positive.
  VelocityDistribution shifted(double dv) const;

 private:
  explicit VelocityDistribution(std::vector<VelocitySample> samples)
      : samples_(std::move(samples)) {}
  std::vector<VelocitySample> samples_;
};

double de_broglie_wavelength(double mass_amu, double velocity);
double talbot_length(double period_m, double lambda_db);
double max_phase_shift(const Molecule& molecule, const InterferometerSetup& setup,
                       double velocity);
double phase_profile(double phi0, double z, double laser_wavelength);

/// Signed fringe amplitude 2 sinc^2(f) J2(arg). Its sign flips between
/// velocity classes whose fringes are phase-inverted.
double fringe_amplitude(const InterferometerSetup& setup, const Molecule& molecule,
                        double velocity, VisibilityModel model);

double visibility_monochromatic(const InterferometerSetup& setup, const Molecule& molecule,
                                double velocity, VisibilityModel model);

/// |sum w A(v)| / sum w: amplitudes are averaged with sign, since the fringe
/// period is geometric and only amplitude and sign vary with velocity.
double visibility_averaged(const InterferometerSetup& setup, const Molecule& molecule,
                           const VelocityDistribution& dist, VisibilityModel model);

struct PowerPoint {
  double power_w;
  double visibility;
};

/// visibility_averaged with the laser power overridden at each point.
/// Evaluated in parallel; the result does not depend on the thread count.
std::vector<PowerPoint> power_scan(const InterferometerSetup& setup, const Molecule& molecule,
                                   const VelocityDistribution& dist,
                                   std::span<const double> powers, VisibilityModel model);

/// Mean number of photons absorbed by a molecule crossing an antinode of the
/// standing wave through the beam centre. Integrates the peak intensity
/// 8P/(pi w_x w_y) exp(-2x^2/w_x^2) along the trajectory numerically; the
/// closed form is n = 8 sigma P lambda_L / (sqrt(2 pi) h c w_y v).
/// For L12 at 1 W and 85 m/s this gives 0.181.
double mean_absorbed_photons(const Molecule& molecule, const InterferometerSetup& setup,
                             double velocity);

}  // namespace kdtl
