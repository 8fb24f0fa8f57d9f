// Acceptance checks. One line per criterion:
//   criterion N: PASS|FAIL  <measured values>
// Run all, or one with --criterion N. Exit status is non-zero if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "kdtl/beam.hpp"
#include "kdtl/cli/commands.hpp"
#include "kdtl/cli/config.hpp"
#include "kdtl/library.hpp"
#include "kdtl/physics.hpp"
#include "kdtl/scan_fit.hpp"

using namespace kdtl;
namespace fs = std::filesystem;

namespace {

const fs::path kReference = fs::path(KDTL_CONFIG_DIR) / "l12_reference.json";
const fs::path kData = KDTL_DATA_DIR;

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

struct Reference {
  cli::ExperimentConfig config = cli::load_config(kReference);
  Molecule molecule = cli::resolve_molecule(config);
  InterferometerSetup setup = *config.setup;
};

std::vector<double> grid(double lo, double hi, int n) {
  std::vector<double> p(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) p[i] = lo + (hi - lo) * i / (n - 1);
  return p;
}

std::size_t argmax(const std::vector<PowerPoint>& curve) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < curve.size(); ++i) {
    if (curve[i].visibility > curve[best].visibility) best = i;
  }
  return best;
}

Outcome wavelength() {
  const auto t0 = Clock::now();
  const double lambda = de_broglie_wavelength(10123.0, 85.0);
  const double dt = seconds_since(t0);
  const double fm = lambda * 1e15;
  return {fm >= 460.0 && fm <= 470.0 && dt < 1e-3,
          fmt("lambda = %.3f fm (want [460, 470]), %.2e s", fm, dt)};
}

// Averaged quantum curve for the Gaussian (85, 30) distribution, 200 points.
struct QuantumPeak {
  double power, quantum, classical, seconds;
};

QuantumPeak quantum_peak(const Reference& ref, double mean, double fwhm) {
  const auto dist = VelocityDistribution::gaussian(mean, fwhm);
  const auto powers = grid(0.01, 2.0, 200);
  const auto t0 = Clock::now();
  const auto q = power_scan(ref.setup, ref.molecule, dist, powers, VisibilityModel::Quantum);
  const double dt = seconds_since(t0);
  const auto i = argmax(q);
  const double c =
      visibility_averaged(ref.setup.with_power(q[i].power_w), ref.molecule, dist, VisibilityModel::Classical);
  return {q[i].power_w, q[i].visibility, c, dt};
}

Outcome quantum_curve() {
  const Reference ref;
  const auto p = quantum_peak(ref, 85.0, 30.0);
  const bool ok = std::abs(p.quantum - 0.33) <= 0.06 && p.power >= 0.6 && p.power <= 1.4 && p.seconds < 10.0;
  return {ok, fmt("peak V = %.4f (want 0.33 +- 0.06) at P = %.2f W (want [0.6, 1.4]), scan %.3f s",
                  p.quantum, p.power, p.seconds)};
}

Outcome classical_exclusion() {
  const Reference ref;
  const auto p = quantum_peak(ref, 85.0, 30.0);
  const double gap = p.quantum - p.classical;
  const bool ok = std::abs(p.classical - 0.08) <= 0.05 && gap >= 0.15;
  return {ok, fmt("at P = %.2f W: classical V = %.4f (want 0.08 +- 0.05), quantum - classical = %.4f "
                  "(want >= 0.15)",
                  p.power, p.classical, gap)};
}

Outcome oracle_equivalence() {
  const Reference ref;
  const auto t0 = Clock::now();
  bool ok = true;
  std::string detail;
  for (double p : {0.25, 0.5, 1.0, 1.5}) {
    const auto s = ref.setup.with_power(p);
    const auto mc = classical_mc_visibility(s, ref.molecule, 85.0, 1'000'000, ref.config.seed);
    const double f = visibility_monochromatic(s, ref.molecule, 85.0, VisibilityModel::Classical);
    const double tol = std::max(0.01, 3.0 * mc.sigma);
    ok = ok && std::abs(mc.visibility - f) < tol;
    detail += fmt("P=%.2f: mc %.4f+-%.4f vs %.4f; ", p, mc.visibility, mc.sigma, f);
  }
  const double dt = seconds_since(t0);
  ok = ok && dt < 60.0;
  return {ok, detail + fmt("%.2f s", dt)};
}

Outcome classical_limit() {
  const Reference ref;
  auto heavy = ref.molecule;
  heavy.mass_amu *= 1000.0;
  double worst = 0.0;
  for (double p : {0.25, 0.5, 1.0, 1.5, 2.0}) {
    const auto s = ref.setup.with_power(p);
    worst = std::max(worst, std::abs(visibility_monochromatic(s, heavy, 85.0, VisibilityModel::Quantum) -
                                     visibility_monochromatic(s, heavy, 85.0, VisibilityModel::Classical)));
  }
  return {worst < 1e-3, fmt("max |Vq - Vcl| at 1000x mass = %.3e (want < 1e-3)", worst)};
}

Outcome talbot_null() {
  const Reference ref;
  auto s = ref.setup;
  s.separation_m = talbot_length(s.period_m, de_broglie_wavelength(ref.molecule.mass_amu, 85.0));
  std::mt19937_64 rng(ref.config.seed);
  std::uniform_real_distribution<double> power(0.0, 5.0);
  double worst = 0.0;
  for (int i = 0; i < 5; ++i) {
    worst = std::max(worst, visibility_monochromatic(s.with_power(power(rng)), ref.molecule, 85.0,
                                                     VisibilityModel::Quantum));
  }
  return {worst < 1e-12, fmt("max V at L = L_T over 5 powers = %.3e (want < 1e-12)", worst)};
}

Outcome library() {
  const auto file = load_library_file(kData / "fluorous_porphyrin_library.txt");
  const auto members = build_library(file.library, file.masses);
  const auto it = std::find_if(members.begin(), members.end(), [](auto& m) { return m.n == 12; });
  bool ok = it != members.end();
  std::string detail;
  if (ok) {
    const bool formula = it->composition == Composition::parse("C284H190F320N4S12");
    ok = formula && std::abs(it->mass_amu - 10123.0) <= 1.0 && it->composition.total_atoms() == 810;
    detail = fmt("L12 %s, %.2f amu, %lld atoms; ", it->composition.to_string().c_str(), it->mass_amu,
                 static_cast<long long>(it->composition.total_atoms()));
  }
  const auto peaks = load_peaks(kData / "maldi_peaks_L.csv");
  const auto a = assign_peaks(members, peaks, 15.0);
  bool all = a.size() == 6;
  std::vector<std::pair<double, int>> matched;
  for (const auto& x : a) {
    detail += fmt("%.0f->n=%d (%+.2f)%s ", x.mz, x.nearest_n, x.residual, x.n ? "" : " unassigned");
    all = all && x.n.has_value();
    if (x.n) matched.emplace_back(x.mz, *x.n);
  }
  std::sort(matched.begin(), matched.end());
  bool monotone = true;
  for (std::size_t i = 1; i < matched.size(); ++i) monotone = monotone && matched[i].second > matched[i - 1].second;
  ok = ok && all && monotone;
  return {ok, detail + (monotone ? "monotone" : "not monotone")};
}

Outcome beam() {
  const auto config = cli::load_config(kReference);
  const auto& b = *config.beam;
  const auto t0 = Clock::now();
  const auto dist = simulate_velocity_selection(b.source, b.geometry, 1'000'000, config.seed);
  const double dt = seconds_since(t0);
  const double mean = dist.mean();
  const double fwhm = dist.fwhm(b.histogram_bins);
  const auto flux = estimate_flux_density(b.source, mean, 1.0, 1.0).flux_per_s;
  const double spacing = mean_spacing_um(30.0);
  const bool ok = std::abs(mean - 85.0) <= 3.0 && std::abs(fwhm - 30.0) <= 5.0 && dt < 30.0 &&
                  flux >= 1.5e15 && flux <= 2.5e15 && std::abs(spacing - 322.0) <= 1.0;
  return {ok, fmt("mean %.2f m/s (want 85 +- 3), FWHM %.2f m/s (want 30 +- 5), %zu survivors, %.2f s; "
                  "flux %.3e /s; spacing at 30/mm^3 %.2f um",
                  mean, fwhm, dist.size(), dt, flux, spacing)};
}

Outcome fit_consistency() {
  const auto config = cli::load_config(kReference);
  const auto& sc = *config.scan;
  const double d = config.setup->period_m * 1e9;
  const auto z = scan_positions(sc.points, sc.periods, d);
  const auto e = fit_ensemble(0.33, d, sc.phase, sc.mean_counts, sc.background, z, 1000, config.seed);
  const double bias = e.mean_visibility - 0.33;
  const double ratio = e.empirical_sigma / e.mean_reported_sigma;
  return {std::abs(bias) < 0.005 && std::abs(ratio - 1.0) <= 0.3,
          fmt("bias %+.5f (want |.| < 0.005), empirical sigma %.4f vs reported %.4f (ratio %.3f)", bias,
              e.empirical_sigma, e.mean_reported_sigma, ratio)};
}

Outcome spread_tolerance() {
  const Reference ref;
  const auto p = quantum_peak(ref, 85.0, 0.2 * 85.0);
  return {p.quantum > p.classical,
          fmt("FWHM/mean = 20%%: at P = %.2f W quantum %.4f vs classical %.4f", p.power, p.quantum, p.classical)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism() {
  const auto root = fs::temp_directory_path() / "kdtl_acceptance_determinism";
  fs::remove_all(root);
  using Cmd = cli::CommandResult (*)(const cli::ExperimentConfig&);
  const std::pair<const char*, Cmd> commands[] = {
      {"visibility", cli::cmd_visibility}, {"scan", cli::cmd_scan}, {"library", cli::cmd_library}, {"beam", cli::cmd_beam}};
  int files = 0;
  std::string mismatched;
  for (const auto& [name, cmd] : commands) {
    std::vector<cli::CommandResult> runs;
    for (const char* run : {"a", "b"}) {
      auto config = cli::load_config(kReference);
      cli::apply_overrides(config, {root / run / name, std::nullopt, std::nullopt});
      runs.push_back(cmd(config));
    }
    for (std::size_t i = 0; i < runs[0].outputs.size(); ++i) {
      const auto& p = runs[0].outputs[i];
      if (p.extension() != ".csv") continue;
      ++files;
      if (i >= runs[1].outputs.size() || slurp(p) != slurp(runs[1].outputs[i])) {
        mismatched += p.filename().string() + " ";
      }
    }
  }
  fs::remove_all(root);
  return {mismatched.empty() && files > 0,
          fmt("%d CSV files compared across two runs%s%s", files, mismatched.empty() ? "" : ", differ: ",
              mismatched.c_str())};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kdtl acceptance checks"};
  int only = 0;
  app.add_option("--criterion", only, "run a single criterion (1-11)")->check(CLI::Range(1, 11));
  CLI11_PARSE(app, argc, argv);

  const std::function<Outcome()> criteria[] = {
      wavelength,      quantum_curve,   classical_exclusion, oracle_equivalence,
      classical_limit, talbot_null,     library,             beam,
      fit_consistency, spread_tolerance, determinism,
  };
  int failed = 0;
  for (int n = 1; n <= 11; ++n) {
    if (only && n != only) continue;
    Outcome o;
    try {
      o = criteria[n - 1]();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("criterion %d: %s  %s\n", n, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    if (!o.pass) ++failed;
  }
  return failed == 0 ? 0 : 1;
}
