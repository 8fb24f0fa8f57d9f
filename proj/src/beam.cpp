#include "kdtl/beam.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "kdtl/constants.hpp"
#include "kdtl/detail/parallel.hpp"

namespace kdtl {
namespace {

using PC = PhysicalConstants;
constexpr double kPi = std::numbers::pi;

constexpr std::size_t kSelectionShards = 64;
constexpr std::size_t kClassicalShards = 16;
constexpr int kScanPositions = 32;     // G3 positions per period
constexpr double kTransversePeriods = 64.0;  // spread of G2 arrival points, in periods

void require_positive(double value, const char* what) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw std::domain_error(std::string(what) + " must be positive and finite");
  }
}

std::size_t shard_size(std::size_t n, std::size_t shards, std::size_t k) {
  return n / shards + (k < n % shards ? 1 : 0);
}

std::size_t shard_offset(std::size_t n, std::size_t shards, std::size_t k) {
  std::size_t offset = 0;
  for (std::size_t i = 0; i < k; ++i) offset += shard_size(n, shards, i);
  return offset;
}

// Wraps into [-d/2, d/2).
double wrap_period(double x, double d) { return x - d * std::floor(x / d + 0.5); }

}  // namespace

void SourceConfig::validate() const {
  require_positive(temperature_k, "source temperature");
  require_positive(molecule_mass_amu, "molecule mass");
  require_positive(evaporated_mass_kg, "evaporated mass");
  require_positive(duration_s, "evaporation duration");
}

void DelimiterGeometry::validate() const {
  double last = 0.0;
  for (std::size_t i = 0; i < apertures.size(); ++i) {
    const auto& a = apertures[i];
    if (!(a.position_m > last)) {
      throw std::domain_error("delimiter positions must be positive and strictly increasing");
    }
    require_positive(a.opening_m, "delimiter opening height");
    if (!std::isfinite(a.center_m)) throw std::domain_error("delimiter height must be finite");
    last = a.position_m;
  }
  if (!(detector_position_m > last)) {
    throw std::domain_error("detector must sit downstream of the last delimiter");
  }
}

double sample_effusive_velocity(double temperature_k, double mass_amu, Rng& rng) {
  require_positive(temperature_k, "temperature");
  require_positive(mass_amu, "mass");
  const double s = -std::log(uniform_open01(rng) * uniform_open01(rng));
  return std::sqrt(2.0 * PC::k_B * temperature_k * s / (mass_amu * PC::amu_to_kg));
}

std::vector<double> sample_effusive_velocities(double temperature_k, double mass_amu,
                                               std::size_t n, std::uint64_t seed) {
  Rng rng = substream(seed, 0);
  std::vector<double> out(n);
  for (auto& v : out) v = sample_effusive_velocity(temperature_k, mass_amu, rng);
  return out;
}

double parabola_height(double velocity, double angle, double x) {
  const double c = std::cos(angle);
  return std::tan(angle) * x - PC::g_gravity * x * x / (2.0 * velocity * velocity * c * c);
}

TrajectorySample trace_trajectory(double velocity, double angle, const DelimiterGeometry& geom) {
  TrajectorySample t{velocity, angle, {}};
  for (std::size_t i = 0; i < geom.apertures.size(); ++i) {
    const auto& a = geom.apertures[i];
    const double y = parabola_height(velocity, angle, a.position_m);
    t.passed[i] = std::abs(y - a.center_m) <= 0.5 * a.opening_m;
  }
  return t;
}

std::vector<TrajectorySample> launch_trajectories(const SourceConfig& source,
                                                  const DelimiterGeometry& geom, std::size_t n,
                                                  std::uint64_t seed) {
  source.validate();
  geom.validate();
  const auto& first = geom.apertures[0];
  const double lo = std::atan((first.center_m - 0.5 * first.opening_m) / first.position_m);
  const double hi = std::atan((first.center_m + 0.5 * first.opening_m) / first.position_m);

  std::vector<TrajectorySample> out(n);
  detail::parallel_for(kSelectionShards, [&](std::size_t k) {
    Rng rng = substream(seed, k);
    const std::size_t begin = shard_offset(n, kSelectionShards, k);
    const std::size_t count = shard_size(n, kSelectionShards, k);
    for (std::size_t i = begin; i < begin + count; ++i) {
      const double v = sample_effusive_velocity(source.temperature_k, source.molecule_mass_amu, rng);
      const double angle = lo + (hi - lo) * uniform01(rng);
      out[i] = trace_trajectory(v, angle, geom);
    }
  });
  return out;
}

VelocityDistribution simulate_velocity_selection(const SourceConfig& source,
                                                 const DelimiterGeometry& geom,
                                                 std::size_t n_samples, std::uint64_t seed) {
  if (n_samples < kMinSelectionSamples) {
    throw std::domain_error("velocity selection needs at least " +
                            std::to_string(kMinSelectionSamples) + " samples, got " +
                            std::to_string(n_samples));
  }
  const auto launched = launch_trajectories(source, geom, n_samples, seed);
  std::vector<VelocitySample> kept;
  for (const auto& t : launched) {
    if (t.transmitted()) kept.push_back({t.launch_velocity, 1.0});
  }
  if (kept.empty()) throw BeamBlockedError();
  return VelocityDistribution::from_samples(std::move(kept));
}

BeamEstimate estimate_flux_density(const SourceConfig& source, double mean_velocity,
                                   double beam_area_mm2, double transmission) {
  source.validate();
  require_positive(mean_velocity, "mean velocity");
  require_positive(beam_area_mm2, "beam area");
  if (!(transmission > 0.0 && transmission <= 1.0)) {
    throw std::domain_error("transmission must lie in (0, 1]");
  }
  BeamEstimate e;
  e.flux_per_s =
      source.evaporated_mass_kg / (source.molecule_mass_amu * PC::amu_to_kg * source.duration_s);
  const double velocity_mm_per_s = mean_velocity * 1e3;
  e.density_per_mm3 = e.flux_per_s * transmission / (velocity_mm_per_s * beam_area_mm2);
  e.spacing_um = mean_spacing_um(e.density_per_mm3);
  return e;
}

double mean_spacing_um(double density_per_mm3) {
  require_positive(density_per_mm3, "density");
  return std::cbrt(1.0 / density_per_mm3) * 1e3;
}

ClassicalMcResult classical_mc_visibility(const InterferometerSetup& setup,
                                          const Molecule& molecule, double velocity,
                                          std::size_t n_samples, std::uint64_t seed) {
  if (n_samples < kMinClassicalSamples) {
    throw std::domain_error("classical Monte Carlo needs at least " +
                            std::to_string(kMinClassicalSamples) + " samples, got " +
                            std::to_string(n_samples));
  }
  require_positive(velocity, "velocity");
  setup.validate();
  molecule.validate();
  if (degenerate_grating(setup)) return {0.0, 0.0};

  const double d = setup.period_m;
  const double slit = setup.open_fraction * d;
  const double flight_time = setup.separation_m / velocity;  // G1->G2 and G2->G3
  const double u_max = 0.5 * kTransversePeriods * d / flight_time;
  // dPhi/dz for Phi = phi0 sin^2(2 pi z / lambda_L).
  const double phi0 = max_phase_shift(molecule, setup, velocity);
  const double k_laser = 2.0 * kPi / setup.laser_wavelength_m;
  const double kick = PC::hbar / (molecule.mass_amu * PC::amu_to_kg) * phi0 * k_laser;

  using Counts = std::array<double, kScanPositions>;
  std::vector<Counts> shard_counts(kClassicalShards);
  detail::parallel_for(kClassicalShards, [&](std::size_t k) {
    Rng rng = substream(seed, k);
    Counts counts{};
    const std::size_t count = shard_size(n_samples, kClassicalShards, k);
    for (std::size_t i = 0; i < count; ++i) {
      const double x0 = slit * (uniform01(rng) - 0.5);
      const double u = u_max * (2.0 * uniform01(rng) - 1.0);
      const double x1 = x0 + u * flight_time;
      const double du = kick * std::sin(2.0 * k_laser * x1);
      const double x2 = x1 + (u + du) * flight_time;
      for (int j = 0; j < kScanPositions; ++j) {
        const double shift = d * j / kScanPositions;
        if (std::abs(wrap_period(x2 - shift, d)) < 0.5 * slit) counts[j] += 1.0;
      }
    }
    shard_counts[k] = counts;
  });

  auto contrast = [](const Counts& s) {
    double re = 0.0, im = 0.0, total = 0.0;
    for (int j = 0; j < kScanPositions; ++j) {
      const double phase = 2.0 * kPi * j / kScanPositions;
      re += s[j] * std::cos(phase);
      im += s[j] * std::sin(phase);
      total += s[j];
    }
    return total > 0.0 ? 2.0 * std::hypot(re, im) / total : 0.0;
  };

  Counts total{};
  std::vector<double> per_shard;
  per_shard.reserve(kClassicalShards);
  for (const auto& c : shard_counts) {
    for (int j = 0; j < kScanPositions; ++j) total[j] += c[j];
    per_shard.push_back(contrast(c));
  }
  const double mean = std::accumulate(per_shard.begin(), per_shard.end(), 0.0) /
                      static_cast<double>(per_shard.size());
  double var = 0.0;
  for (double v : per_shard) var += (v - mean) * (v - mean);
  var /= static_cast<double>(per_shard.size() - 1);
  return {contrast(total), std::sqrt(var / static_cast<double>(per_shard.size()))};
}

}  // namespace kdtl
