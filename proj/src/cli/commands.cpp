#include "kdtl/cli/commands.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <stdexcept>

#include "CLI11.hpp"
#include "json.hpp"
#include "kdtl/cli/csv.hpp"
#include "kdtl/constants.hpp"
#include "kdtl/detail/text.hpp"
#include "kdtl/library.hpp"
#include "kdtl/scan_fit.hpp"

namespace kdtl::cli {
namespace {

using json = nlohmann::ordered_json;
using detail::format_double;

template <typename Fn>
auto stage(std::string_view label, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const BeamBlockedError&) {
    throw;
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string(label) + ": " + e.what());
  }
}

template <typename T>
const T& section(const std::optional<T>& s, const char* name) {
  if (!s) throw ConfigError(name, "missing section");
  return *s;
}

std::filesystem::path prepare_output_dir(const ExperimentConfig& config) {
  std::error_code ec;
  std::filesystem::create_directories(config.output_dir, ec);
  if (ec) throw std::runtime_error("cannot create " + config.output_dir.string() + ": " + ec.message());
  return config.output_dir;
}

std::string config_hash(const ExperimentConfig& config) {
  const std::string key = config.canonical_text + "|seed=" + std::to_string(config.seed) +
                          "|model=" + std::string(to_string(config.model));
  return hex64(fnv1a64(key));
}

void finish(const ExperimentConfig& config, std::string_view command, CommandResult& result) {
  json manifest;
  manifest["command"] = command;
  manifest["version"] = kVersion;
  manifest["constants"] = PhysicalConstants::vintage;
  manifest["config_hash"] = config_hash(config);
  manifest["seed"] = config.seed;
  manifest["model"] = to_string(config.model);
  json outputs = json::array();
  for (const auto& p : result.outputs) {
    outputs.push_back({{"file", p.filename().string()}, {"fnv1a64", file_digest(p)}});
  }
  manifest["outputs"] = outputs;
  json summary = json::object();
  for (const auto& [k, v] : result.summary) summary[k] = v;
  manifest["summary"] = summary;

  const auto path = config.output_dir / (std::string(command) + "_manifest.json");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << manifest.dump(2) << '\n';
  result.outputs.push_back(path);
}

const InterferometerSetup& require_setup(const ExperimentConfig& config) {
  return section(config.setup, "setup");
}

}  // namespace

const std::string& CommandResult::get(std::string_view key) const {
  for (const auto& [k, v] : summary) {
    if (k == key) return v;
  }
  throw std::out_of_range("no summary entry " + std::string(key));
}

VelocityDistribution resolve_velocity(const ExperimentConfig& config) {
  const auto& v = section(config.velocity, "velocity");
  if (const auto* a = std::get_if<AnalyticVelocity>(&v)) {
    return stage("velocity", [&] { return VelocityDistribution::gaussian(a->mean, a->fwhm, a->points); });
  }
  const auto& beam = section(config.beam, "beam");
  return stage("beam", [&] {
    return simulate_velocity_selection(beam.source, beam.geometry, beam.n_samples, config.seed);
  });
}

CommandResult cmd_visibility(const ExperimentConfig& config) {
  const auto& setup = require_setup(config);
  const auto& vis = section(config.visibility, "visibility");
  const Molecule molecule = resolve_molecule(config);
  const auto dist = resolve_velocity(config);
  const double shift = vis.velocity_shift;

  const auto faster = stage("velocity +shift", [&] { return dist.shifted(shift); });
  const auto slower = stage("velocity -shift", [&] { return dist.shifted(-shift); });
  auto scan = [&](const VelocityDistribution& d, VisibilityModel m, const char* label) {
    return stage(label, [&] { return power_scan(setup, molecule, d, vis.powers_w, m); });
  };
  const auto quantum = scan(dist, VisibilityModel::Quantum, "quantum curve");
  const auto classical = scan(dist, VisibilityModel::Classical, "classical curve");
  const auto q_fast = scan(faster, VisibilityModel::Quantum, "quantum curve (v+shift)");
  const auto q_slow = scan(slower, VisibilityModel::Quantum, "quantum curve (v-shift)");

  const auto dir = prepare_output_dir(config);
  CsvTable table;
  const std::string s = format_double(shift);
  table.header = {"power [W]", "V_quantum [1]", "V_classical [1]", "V_quantum_v+" + s + " [1]",
                  "V_quantum_v-" + s + " [1]"};
  for (std::size_t i = 0; i < quantum.size(); ++i) {
    table.rows.push_back({format_double(quantum[i].power_w), format_double(quantum[i].visibility),
                          format_double(classical[i].visibility), format_double(q_fast[i].visibility),
                          format_double(q_slow[i].visibility)});
  }
  CommandResult result;
  result.outputs.push_back(dir / "visibility_curves.csv");
  write_csv(result.outputs.back(), table);

  const auto peak = std::max_element(quantum.begin(), quantum.end(),
                                     [](auto& a, auto& b) { return a.visibility < b.visibility; });
  const auto idx = static_cast<std::size_t>(peak - quantum.begin());
  result.summary = {
      {"molecule_mass_amu", detail::format_fixed(molecule.mass_amu, 2)},
      {"mean_velocity_m_s", detail::format_fixed(dist.mean(), 3)},
      {"peak_power_w", format_double(peak->power_w)},
      {"peak_visibility_quantum", detail::format_fixed(peak->visibility, 4)},
      {"classical_at_peak", detail::format_fixed(classical[idx].visibility, 4)},
  };
  if (auto diag = degenerate_grating(setup)) result.summary.emplace_back("diagnostic", *diag);
  finish(config, "visibility", result);
  return result;
}

CommandResult cmd_scan(const ExperimentConfig& config) {
  const auto& setup = require_setup(config);
  const auto& sc = section(config.scan, "scan");
  const Molecule molecule = resolve_molecule(config);
  const auto dist = resolve_velocity(config);

  const double model_v = stage("visibility model", [&] {
    return visibility_averaged(setup, molecule, dist, config.model);
  });
  const double period_nm = setup.period_m * 1e9;
  const auto positions = scan_positions(sc.points, sc.periods, period_nm);
  const auto scan = stage("synthesize", [&] {
    return synthesize_scan(model_v, period_nm, sc.phase, sc.mean_counts, sc.background, positions,
                           config.seed);
  });
  const auto fit = stage("fit", [&] { return fit_scan(scan); });

  const auto dir = prepare_output_dir(config);
  CommandResult result;
  result.outputs.push_back(dir / "scan.csv");
  {
    std::ofstream out(result.outputs.back(), std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + result.outputs.back().string());
    write_scan(out, scan);
  }

  json record;
  record["model"] = to_string(config.model);
  record["model_visibility"] = model_v;
  record["visibility"] = fit.visibility;
  record["uncertainty"] = fit.uncertainty;
  record["phase_rad"] = fit.phase;
  record["mean_level"] = fit.mean_level;
  record["amplitude"] = fit.amplitude;
  record["s_max"] = fit.s_max();
  record["s_min"] = fit.s_min();
  record["background"] = scan.background;
  result.summary = {
      {"model", std::string(to_string(config.model))},
      {"model_visibility", detail::format_fixed(model_v, 4)},
      {"fitted_visibility", detail::format_fixed(fit.visibility, 4)},
      {"uncertainty", detail::format_fixed(fit.uncertainty, 4)},
  };
  if (sc.ensemble_seeds > 0) {
    const auto ens = stage("ensemble", [&] {
      return fit_ensemble(model_v, period_nm, sc.phase, sc.mean_counts, sc.background, positions,
                          sc.ensemble_seeds, config.seed + 1);
    });
    record["ensemble"] = {{"seeds", ens.seeds},
                          {"mean_visibility", ens.mean_visibility},
                          {"empirical_sigma", ens.empirical_sigma},
                          {"mean_reported_sigma", ens.mean_reported_sigma}};
    result.summary.emplace_back("ensemble_mean_visibility", detail::format_fixed(ens.mean_visibility, 4));
    result.summary.emplace_back("ensemble_empirical_sigma", detail::format_fixed(ens.empirical_sigma, 4));
  }
  result.outputs.push_back(dir / "scan_fit.json");
  {
    std::ofstream out(result.outputs.back(), std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + result.outputs.back().string());
    out << record.dump(2) << '\n';
  }
  finish(config, "scan", result);
  return result;
}

CommandResult cmd_library(const ExperimentConfig& config) {
  const auto& ls = section(config.library, "library");
  const auto file = stage("library file", [&] { return load_library_file(ls.file); });
  const auto members = stage("build library", [&] { return build_library(file.library, file.masses); });

  const auto dir = prepare_output_dir(config);
  CommandResult result;
  CsvTable table;
  table.comments = {"library = " + file.library.name, "masses = " + file.masses.provenance()};
  table.header = {"n [1]", "formula [text]", "mass [amu]", "atoms [1]"};
  for (const auto& m : members) {
    table.rows.push_back({std::to_string(m.n), m.composition.to_string(), detail::format_fixed(m.mass_amu, 4),
                          std::to_string(m.composition.total_atoms())});
  }
  result.outputs.push_back(dir / "library_members.csv");
  write_csv(result.outputs.back(), table);
  result.summary.emplace_back("members", std::to_string(members.size()));
  const double delta = molecular_mass(file.library.added_group, file.masses) -
                       molecular_mass(file.library.leaving_group, file.masses);
  result.summary.emplace_back("mass_spacing_amu", detail::format_fixed(delta, 4));

  if (ls.peaks) {
    const auto peaks = stage("peak file", [&] { return load_peaks(*ls.peaks); });
    const auto assignments = assign_peaks(members, peaks, ls.tolerance_amu);
    CsvTable pt;
    pt.comments = {"tolerance_amu = " + format_double(ls.tolerance_amu)};
    pt.header = {"mz [amu]", "intensity [%]", "nearest_n [1]", "residual [amu]", "assigned [bool]", "tie [bool]"};
    int assigned = 0;
    double worst = 0.0;
    for (const auto& a : assignments) {
      pt.rows.push_back({format_double(a.mz), format_double(a.intensity_percent), std::to_string(a.nearest_n),
                         detail::format_fixed(a.residual, 3), a.n ? "1" : "0", a.tie ? "1" : "0"});
      if (a.n) ++assigned;
      worst = std::max(worst, std::abs(a.residual));
    }
    result.outputs.push_back(dir / "library_peaks.csv");
    write_csv(result.outputs.back(), pt);
    result.summary.emplace_back("peaks", std::to_string(assignments.size()));
    result.summary.emplace_back("assigned_peaks", std::to_string(assigned));
    result.summary.emplace_back("max_abs_residual_amu", detail::format_fixed(worst, 3));
  }
  finish(config, "library", result);
  return result;
}

CommandResult cmd_beam(const ExperimentConfig& config) {
  const auto& beam = section(config.beam, "beam");
  const auto dist = stage("velocity selection", [&] {
    return simulate_velocity_selection(beam.source, beam.geometry, beam.n_samples, config.seed);
  });
  const auto estimate = stage("flux estimate", [&] {
    return estimate_flux_density(beam.source, dist.mean(), beam.beam_area_mm2, beam.transmission);
  });

  const auto dir = prepare_output_dir(config);
  CommandResult result;
  CsvTable hist;
  hist.header = {"velocity [m/s]", "weight [1]"};
  for (const auto& [v, w] : dist.histogram(beam.histogram_bins)) {
    hist.rows.push_back({format_double(v), format_double(w)});
  }
  result.outputs.push_back(dir / "beam_velocity_histogram.csv");
  write_csv(result.outputs.back(), hist);

  const double fwhm = dist.fwhm(beam.histogram_bins);
  CsvTable summary;
  summary.header = {"launched [1]", "transmitted [1]", "mean_velocity [m/s]", "fwhm [m/s]",
                    "flux [1/s]", "density [1/mm^3]", "spacing [um]"};
  summary.rows.push_back({std::to_string(beam.n_samples), std::to_string(dist.size()),
                          format_double(dist.mean()), format_double(fwhm), format_double(estimate.flux_per_s),
                          format_double(estimate.density_per_mm3), format_double(estimate.spacing_um)});
  result.outputs.push_back(dir / "beam_summary.csv");
  write_csv(result.outputs.back(), summary);

  result.summary = {
      {"transmitted", std::to_string(dist.size())},
      {"mean_velocity_m_s", detail::format_fixed(dist.mean(), 3)},
      {"fwhm_m_s", detail::format_fixed(fwhm, 3)},
      {"flux_per_s", format_double(estimate.flux_per_s)},
      {"density_per_mm3", format_double(estimate.density_per_mm3)},
      {"spacing_um", detail::format_fixed(estimate.spacing_um, 2)},
  };
  finish(config, "beam", result);
  return result;
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Kapitza-Dirac-Talbot-Lau interferometer simulation"};
  app.require_subcommand(1);
  std::filesystem::path config_path;
  Overrides overrides;
  std::string out_dir;
  std::uint64_t seed = 0;
  std::string model;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "experiment config (JSON)")->required();
    sub->add_option("--out", out_dir, "output directory (overrides output_dir)");
    sub->add_option("--seed", seed, "random seed (overrides seed)");
    sub->add_option("--model", model, "quantum|classical (overrides model)")
        ->check(CLI::IsMember({"quantum", "classical"}));
  };
  struct Command {
    const char* name;
    const char* help;
    CommandResult (*run)(const ExperimentConfig&);
  };
  const Command commands[] = {
      {"visibility", "visibility-vs-power curves", cmd_visibility},
      {"scan", "synthetic interferogram and sinusoid fit", cmd_scan},
      {"library", "library masses and MALDI peak assignment", cmd_library},
      {"beam", "gravitational velocity selection and beam estimate", cmd_beam},
  };
  std::vector<std::pair<CLI::App*, const Command*>> subs;
  for (const auto& c : commands) {
    auto* sub = app.add_subcommand(c.name, c.help);
    add_common(sub);
    subs.emplace_back(sub, &c);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    for (const auto& [sub, command] : subs) {
      if (!sub->parsed()) continue;
      if (!out_dir.empty()) overrides.output_dir = out_dir;
      if (sub->count("--seed")) overrides.seed = seed;
      if (!model.empty()) overrides.model = parse_visibility_model(model);
      auto config = load_config(config_path);
      apply_overrides(config, overrides);
      const auto result = command->run(config);
      for (const auto& [k, v] : result.summary) std::cout << k << ": " << v << '\n';
      for (const auto& p : result.outputs) std::cout << "wrote " << p.string() << '\n';
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const BeamBlockedError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}

}  // namespace kdtl::cli
