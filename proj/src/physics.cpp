#include "kdtl/physics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "kdtl/bessel.hpp"
#include "kdtl/constants.hpp"
#include "kdtl/detail/parallel.hpp"

namespace kdtl {
namespace {

using PC = PhysicalConstants;
constexpr double kPi = std::numbers::pi;

void require_positive(double value, const char* what) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw std::domain_error(std::string(what) + " must be positive and finite, got " +
                            std::to_string(value));
  }
}

double sinc(double f) {
  if (f == 0.0) return 1.0;
  return std::sin(kPi * f) / (kPi * f);
}

}  // namespace

void Molecule::validate() const {
  require_positive(mass_amu, "molecule mass");
  if (!(alpha_m3 >= 0.0)) throw std::domain_error("polarizability must be >= 0");
  if (!(sigma_abs_m2 >= 0.0)) throw std::domain_error("absorption cross section must be >= 0");
}

void InterferometerSetup::validate() const {
  require_positive(period_m, "grating period");
  require_positive(separation_m, "grating separation");
  require_positive(laser_wavelength_m, "laser wavelength");
  require_positive(waist_x_m, "laser waist w_x");
  require_positive(waist_y_m, "laser waist w_y");
  if (!(open_fraction >= 0.0 && open_fraction <= 1.0)) {
    throw std::domain_error("open fraction must lie in [0, 1]");
  }
  if (!(laser_power_w >= 0.0) || !std::isfinite(laser_power_w)) {
    throw std::domain_error("laser power must be >= 0");
  }
  // Standing-wave grating: d = lambda_L / 2.
  if (std::abs(laser_wavelength_m - 2.0 * period_m) > 1e-6 * 2.0 * period_m) {
    throw std::domain_error("laser wavelength must equal twice the grating period (1 ppm)");
  }
}

InterferometerSetup InterferometerSetup::with_power(double power_w) const {
  InterferometerSetup copy = *this;
  copy.laser_power_w = power_w;
  return copy;
}

std::optional<std::string> degenerate_grating(const InterferometerSetup& setup) {
  if (setup.open_fraction <= 0.0) {
    return "open fraction 0: material gratings transmit nothing, visibility set to 0";
  }
  if (setup.open_fraction >= 1.0) {
    return "open fraction 1: material gratings have no bars, visibility set to 0";
  }
  return std::nullopt;
}

std::string_view to_string(VisibilityModel model) {
  return model == VisibilityModel::Quantum ? "quantum" : "classical";
}

std::optional<VisibilityModel> parse_visibility_model(std::string_view text) {
  if (text == "quantum") return VisibilityModel::Quantum;
  if (text == "classical") return VisibilityModel::Classical;
  return std::nullopt;
}

// VelocityDistribution ------------------------------------------------------

VelocityDistribution VelocityDistribution::from_samples(std::vector<VelocitySample> samples) {
  if (samples.empty()) throw std::domain_error("velocity distribution is empty");
  double total = 0.0;
  for (const auto& s : samples) {
    require_positive(s.velocity, "velocity");
    if (!(s.weight >= 0.0) || !std::isfinite(s.weight)) {
      throw std::domain_error("velocity weights must be non-negative");
    }
    total += s.weight;
  }
  if (!(total > 0.0)) throw std::domain_error("velocity weights sum to zero");
  return VelocityDistribution(std::move(samples));
}

VelocityDistribution VelocityDistribution::dirac(double velocity) {
  return from_samples({{velocity, 1.0}});
}

VelocityDistribution VelocityDistribution::gaussian(double mean, double fwhm, int points,
                                                    double span_sigmas) {
  require_positive(mean, "mean velocity");
  if (!(fwhm >= 0.0)) throw std::domain_error("FWHM must be >= 0");
  if (fwhm == 0.0) return dirac(mean);
  if (points < 2) throw std::domain_error("gaussian grid needs at least two points");
  require_positive(span_sigmas, "gaussian span");

  const double sigma = fwhm / (2.0 * std::sqrt(2.0 * std::numbers::ln2));
  const double lo = mean - span_sigmas * sigma;
  const double step = 2.0 * span_sigmas * sigma / (points - 1);
  std::vector<VelocitySample> samples;
  samples.reserve(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) {
    const double v = lo + i * step;
    if (v <= 0.0) continue;
    const double u = (v - mean) / sigma;
    samples.push_back({v, std::exp(-0.5 * u * u)});
  }
  return from_samples(std::move(samples));
}

double VelocityDistribution::total_weight() const {
  double total = 0.0;
  for (const auto& s : samples_) total += s.weight;
  return total;
}

double VelocityDistribution::mean() const {
  double num = 0.0;
  double den = 0.0;
  for (const auto& s : samples_) {
    num += s.weight * s.velocity;
    den += s.weight;
  }
  return num / den;
}

double VelocityDistribution::min_velocity() const {
  return std::min_element(samples_.begin(), samples_.end(),
                          [](auto& a, auto& b) { return a.velocity < b.velocity; })
      ->velocity;
}

double VelocityDistribution::max_velocity() const {
  return std::max_element(samples_.begin(), samples_.end(),
                          [](auto& a, auto& b) { return a.velocity < b.velocity; })
      ->velocity;
}

std::vector<std::pair<double, double>> VelocityDistribution::histogram(int bins) const {
  if (bins < 1) throw std::domain_error("histogram needs at least one bin");
  const double lo = min_velocity();
  const double hi = max_velocity();
  if (hi == lo) return {{lo, total_weight()}};

  const double width = (hi - lo) / bins;
  std::vector<std::pair<double, double>> hist(static_cast<std::size_t>(bins));
  for (int k = 0; k < bins; ++k) hist[k] = {lo + (k + 0.5) * width, 0.0};
  for (const auto& s : samples_) {
    const double t = (s.velocity - lo) / width - 0.5;
    const double k0 = std::floor(t);
    const double frac = t - k0;
    const auto k = static_cast<long>(k0);
    if (k < 0) {
      hist.front().second += s.weight;
    } else if (k >= bins - 1) {
      hist.back().second += s.weight;
    } else {
      hist[k].second += s.weight * (1.0 - frac);
      hist[k + 1].second += s.weight * frac;
    }
  }
  return hist;
}

double VelocityDistribution::fwhm(int bins) const {
  if (min_velocity() == max_velocity()) return 0.0;
  const auto hist = histogram(bins);
  const auto n = static_cast<long>(hist.size());
  long peak = 0;
  for (long i = 1; i < n; ++i) {
    if (hist[i].second > hist[peak].second) peak = i;
  }
  const double half = 0.5 * hist[peak].second;
  const double width = hist[1].first - hist[0].first;

  auto crossing = [&](long inside, long outside) {
    const double a = hist[inside].second;
    const double b = hist[outside].second;
    const double t = (a - half) / (a - b);
    const double dir = outside > inside ? 1.0 : -1.0;
    return hist[inside].first + dir * t * width;
  };

  long i = peak;
  while (i > 0 && hist[i - 1].second >= half) --i;
  const double left = i > 0 ? crossing(i, i - 1) : min_velocity();
  long j = peak;
  while (j < n - 1 && hist[j + 1].second >= half) ++j;
  const double right = j < n - 1 ? crossing(j, j + 1) : max_velocity();
  return right - left;
}

VelocityDistribution VelocityDistribution::shifted(double dv) const {
  std::vector<VelocitySample> out(samples_.begin(), samples_.end());
  for (auto& s : out) s.velocity += dv;
  return from_samples(std::move(out));
}

// Closed-form model ---------------------------------------------------------

double de_broglie_wavelength(double mass_amu, double velocity) {
  require_positive(mass_amu, "mass");
  require_positive(velocity, "velocity");
  return PC::h / (mass_amu * PC::amu_to_kg * velocity);
}

double talbot_length(double period_m, double lambda_db) {
  require_positive(period_m, "grating period");
  require_positive(lambda_db, "de Broglie wavelength");
  return period_m * period_m / lambda_db;
}

double max_phase_shift(const Molecule& molecule, const InterferometerSetup& setup,
                       double velocity) {
  require_positive(velocity, "velocity");
  return 8.0 * std::sqrt(2.0 * kPi) * molecule.alpha_m3 * setup.laser_power_w /
         (PC::hbar * PC::c * setup.waist_y_m * velocity);
}

double phase_profile(double phi0, double z, double laser_wavelength) {
  require_positive(laser_wavelength, "laser wavelength");
  const double s = std::sin(2.0 * kPi * z / laser_wavelength);
  return phi0 * s * s;
}

double fringe_amplitude(const InterferometerSetup& setup, const Molecule& molecule,
                        double velocity, VisibilityModel model) {
  require_positive(velocity, "velocity");
  if (degenerate_grating(setup)) return 0.0;

  const double lambda = de_broglie_wavelength(molecule.mass_amu, velocity);
  const double ratio = setup.separation_m / talbot_length(setup.period_m, lambda);
  const double phi0 = max_phase_shift(molecule, setup, velocity);
  const double geometric =
      model == VisibilityModel::Quantum ? std::sin(kPi * ratio) : kPi * ratio;
  const double s = sinc(setup.open_fraction);
  return 2.0 * s * s * bessel_j2(phi0 * geometric);
}

double visibility_monochromatic(const InterferometerSetup& setup, const Molecule& molecule,
                                double velocity, VisibilityModel model) {
  return std::abs(fringe_amplitude(setup, molecule, velocity, model));
}

double visibility_averaged(const InterferometerSetup& setup, const Molecule& molecule,
                           const VelocityDistribution& dist, VisibilityModel model) {
  if (dist.size() == 0) throw std::domain_error("velocity distribution is empty");
  double num = 0.0;
  double den = 0.0;
  for (const auto& s : dist.samples()) {
    num += s.weight * fringe_amplitude(setup, molecule, s.velocity, model);
    den += s.weight;
  }
  return std::abs(num / den);
}

std::vector<PowerPoint> power_scan(const InterferometerSetup& setup, const Molecule& molecule,
                                   const VelocityDistribution& dist,
                                   std::span<const double> powers, VisibilityModel model) {
  if (powers.empty()) throw std::domain_error("power scan needs at least one power");
  std::vector<PowerPoint> out(powers.size());
  detail::parallel_for(powers.size(), [&](std::size_t i) {
    try {
      if (!(powers[i] >= 0.0)) throw std::domain_error("laser power must be >= 0");
      out[i] = {powers[i], visibility_averaged(setup.with_power(powers[i]), molecule, dist,
                                               model)};
    } catch (const std::exception& e) {
      throw std::domain_error("power_scan[" + std::to_string(i) +
                              "] (P = " + std::to_string(powers[i]) + " W): " + e.what());
    }
  });
  return out;
}

double mean_absorbed_photons(const Molecule& molecule, const InterferometerSetup& setup,
                             double velocity) {
  require_positive(velocity, "velocity");
  const double wx = setup.waist_x_m;
  const double peak = 8.0 * setup.laser_power_w / (kPi * wx * setup.waist_y_m);

  // Composite Simpson over +-8 w_x; the Gaussian tail beyond is < 1e-55.
  constexpr int intervals = 4000;
  const double a = -8.0 * wx;
  const double step = 16.0 * wx / intervals;
  double sum = 0.0;
  for (int i = 0; i <= intervals; ++i) {
    const double x = a + i * step;
    const double weight = (i == 0 || i == intervals) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    sum += weight * peak * std::exp(-2.0 * x * x / (wx * wx));
  }
  const double fluence = sum * step / 3.0 / velocity;  // J/m^2
  const double photon_energy = PC::h * PC::c / setup.laser_wavelength_m;
  return molecule.sigma_abs_m2 * fluence / photon_energy;
}

}  // namespace kdtl
