#include "kdtl/cli/config.hpp"

#include <fstream>
#include <initializer_list>
#include <sstream>

#include "json.hpp"
#include "kdtl/library.hpp"

namespace kdtl::cli {
namespace {

using json = nlohmann::json;

std::string join(const std::string& path, std::string_view key) {
  return path.empty() ? std::string(key) : path + "." + std::string(key);
}

void check_keys(const json& obj, const std::string& path,
                std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) throw ConfigError(path.empty() ? "<root>" : path, "expected an object");
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError(join(path, key), "unknown field");
  }
}

const json* find(const json& obj, std::string_view key) {
  const auto it = obj.find(std::string(key));
  return it == obj.end() ? nullptr : &*it;
}

const json& require(const json& obj, const std::string& path, std::string_view key) {
  const json* v = find(obj, key);
  if (!v) throw ConfigError(join(path, key), "missing required field");
  return *v;
}

double number(const json& obj, const std::string& path, std::string_view key,
              std::optional<double> fallback = std::nullopt) {
  const json* v = find(obj, key);
  if (!v) {
    if (fallback) return *fallback;
    throw ConfigError(join(path, key), "missing required field");
  }
  if (!v->is_number()) throw ConfigError(join(path, key), "expected a number");
  return v->get<double>();
}

double positive(const json& obj, const std::string& path, std::string_view key,
                std::optional<double> fallback = std::nullopt) {
  const double v = number(obj, path, key, fallback);
  if (!(v > 0.0)) throw ConfigError(join(path, key), "must be positive");
  return v;
}

long long integer(const json& obj, const std::string& path, std::string_view key,
                  std::optional<long long> fallback = std::nullopt) {
  const json* v = find(obj, key);
  if (!v) {
    if (fallback) return *fallback;
    throw ConfigError(join(path, key), "missing required field");
  }
  if (!v->is_number_integer()) throw ConfigError(join(path, key), "expected an integer");
  return v->get<long long>();
}

std::string string(const json& obj, const std::string& path, std::string_view key) {
  const json& v = require(obj, path, key);
  if (!v.is_string()) throw ConfigError(join(path, key), "expected a string");
  return v.get<std::string>();
}

std::filesystem::path existing_file(const json& obj, const std::string& path, std::string_view key,
                                    const std::filesystem::path& base_dir) {
  std::filesystem::path p = string(obj, path, key);
  if (p.is_relative()) p = base_dir / p;
  if (!std::filesystem::is_regular_file(p)) {
    throw ConfigError(join(path, key), "file not found: " + p.string());
  }
  return p.lexically_normal();
}

template <typename Fn>
void validated(const std::string& path, Fn&& fn) {
  try {
    fn();
  } catch (const std::domain_error& e) {
    throw ConfigError(path, e.what());
  }
}

MoleculeSpec parse_molecule(const json& j, const std::filesystem::path& base) {
  const std::string path = "molecule";
  check_keys(j, path, {"library_member", "formula", "mass_amu", "alpha_m3", "sigma_abs_m2"});
  MoleculeSpec spec;
  const json* member = find(j, "library_member");
  const json* formula = find(j, "formula");
  if ((member != nullptr) == (formula != nullptr)) {
    throw ConfigError(path, "give exactly one of library_member or formula");
  }
  if (member) {
    const std::string mpath = join(path, "library_member");
    check_keys(*member, mpath, {"library_file", "n"});
    LibraryMemberRef ref;
    ref.library_file = existing_file(*member, mpath, "library_file", base);
    const auto n = integer(*member, mpath, "n");
    if (n < 0) throw ConfigError(join(mpath, "n"), "must be >= 0");
    ref.n = static_cast<int>(n);
    if (find(j, "mass_amu")) throw ConfigError(join(path, "mass_amu"), "not allowed with library_member");
    spec.source = ref;
  } else {
    ExplicitFormula f;
    f.formula = string(j, path, "formula");
    try {
      (void)Composition::parse(f.formula);
    } catch (const FormulaError& e) {
      throw ConfigError(join(path, "formula"), e.what());
    }
    if (find(j, "mass_amu")) f.mass_amu = positive(j, path, "mass_amu");
    spec.source = f;
  }
  spec.alpha_m3 = number(j, path, "alpha_m3");
  spec.sigma_abs_m2 = number(j, path, "sigma_abs_m2", 0.0);
  if (spec.alpha_m3 < 0.0) throw ConfigError(join(path, "alpha_m3"), "must be >= 0");
  if (spec.sigma_abs_m2 < 0.0) throw ConfigError(join(path, "sigma_abs_m2"), "must be >= 0");
  return spec;
}

InterferometerSetup parse_setup(const json& j) {
  const std::string path = "setup";
  check_keys(j, path,
             {"period_m", "open_fraction", "separation_m", "laser_wavelength_m", "laser_power_w",
              "waist_x_m", "waist_y_m"});
  InterferometerSetup s;
  s.period_m = number(j, path, "period_m");
  s.open_fraction = number(j, path, "open_fraction");
  s.separation_m = number(j, path, "separation_m");
  s.laser_wavelength_m = number(j, path, "laser_wavelength_m", 2.0 * s.period_m);
  s.laser_power_w = number(j, path, "laser_power_w");
  s.waist_x_m = number(j, path, "waist_x_m");
  s.waist_y_m = number(j, path, "waist_y_m");
  validated(path, [&] { s.validate(); });
  return s;
}

std::vector<double> parse_powers(const json& j, const std::string& path) {
  std::vector<double> out;
  if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) {
      const std::string p = path + "[" + std::to_string(i) + "]";
      if (!j[i].is_number()) throw ConfigError(p, "expected a number");
      const double v = j[i].get<double>();
      if (!(v >= 0.0)) throw ConfigError(p, "power must be >= 0");
      out.push_back(v);
    }
  } else {
    check_keys(j, path, {"start", "stop", "count"});
    const double start = number(j, path, "start");
    const double stop = number(j, path, "stop");
    const auto count = integer(j, path, "count");
    if (count < 1 || count > 1'000'000) throw ConfigError(join(path, "count"), "must be in [1, 1e6]");
    if (start < 0.0 || stop < start) throw ConfigError(path, "need 0 <= start <= stop");
    for (long long i = 0; i < count; ++i) {
      out.push_back(count == 1 ? start : start + (stop - start) * i / static_cast<double>(count - 1));
    }
  }
  if (out.empty()) throw ConfigError(path, "power list is empty");
  return out;
}

BeamSection parse_beam(const json& j) {
  const std::string path = "beam";
  check_keys(j, path,
             {"source", "geometry", "n_samples", "histogram_bins", "beam_area_mm2", "transmission"});
  BeamSection b;
  {
    const std::string sp = join(path, "source");
    const json& s = require(j, path, "source");
    check_keys(s, sp, {"temperature_k", "molecule_mass_amu", "evaporated_mass_kg", "duration_s"});
    b.source.temperature_k = positive(s, sp, "temperature_k");
    b.source.molecule_mass_amu = positive(s, sp, "molecule_mass_amu");
    b.source.evaporated_mass_kg = positive(s, sp, "evaporated_mass_kg");
    b.source.duration_s = positive(s, sp, "duration_s");
  }
  {
    const std::string gp = join(path, "geometry");
    const json& g = require(j, path, "geometry");
    check_keys(g, gp, {"delimiters", "detector_position_m", "note"});
    const json& ds = require(g, gp, "delimiters");
    if (!ds.is_array() || ds.size() != 3) {
      throw ConfigError(join(gp, "delimiters"), "expected exactly three delimiters");
    }
    for (std::size_t i = 0; i < 3; ++i) {
      const std::string dp = join(gp, "delimiters") + "[" + std::to_string(i) + "]";
      check_keys(ds[i], dp, {"position_m", "center_m", "opening_m"});
      b.geometry.apertures[i] = {number(ds[i], dp, "position_m"), number(ds[i], dp, "center_m"),
                                 number(ds[i], dp, "opening_m")};
    }
    b.geometry.detector_position_m = number(g, gp, "detector_position_m");
    validated(gp, [&] { b.geometry.validate(); });
  }
  const auto n = integer(j, path, "n_samples", 1'000'000);
  if (n < static_cast<long long>(kMinSelectionSamples)) {
    throw ConfigError(join(path, "n_samples"),
                      "must be at least " + std::to_string(kMinSelectionSamples));
  }
  b.n_samples = static_cast<std::size_t>(n);
  const auto bins = integer(j, path, "histogram_bins", 64);
  if (bins < 2 || bins > 100000) throw ConfigError(join(path, "histogram_bins"), "must be in [2, 1e5]");
  b.histogram_bins = static_cast<int>(bins);
  b.beam_area_mm2 = positive(j, path, "beam_area_mm2", 1.0);
  b.transmission = number(j, path, "transmission", 1.0);
  if (!(b.transmission > 0.0 && b.transmission <= 1.0)) {
    throw ConfigError(join(path, "transmission"), "must lie in (0, 1]");
  }
  return b;
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError("<root>", e.what());
  }
  check_keys(j, "",
             {"seed", "output_dir", "model", "molecule", "setup", "velocity", "visibility", "scan",
              "library", "beam", "description"});

  ExperimentConfig c;
  c.canonical_text = j.dump();
  c.base_dir = base_dir;
  if (const json* seed = find(j, "seed")) {
    if (!seed->is_number_unsigned()) throw ConfigError("seed", "expected a non-negative integer");
    c.seed = seed->get<std::uint64_t>();
  }
  if (find(j, "output_dir")) c.output_dir = string(j, "", "output_dir");
  if (find(j, "model")) {
    const auto m = parse_visibility_model(string(j, "", "model"));
    if (!m) throw ConfigError("model", "expected \"quantum\" or \"classical\"");
    c.model = *m;
  }
  if (const json* m = find(j, "molecule")) c.molecule = parse_molecule(*m, base_dir);
  if (const json* s = find(j, "setup")) c.setup = parse_setup(*s);

  if (const json* v = find(j, "velocity")) {
    check_keys(*v, "velocity", {"analytic", "beam"});
    const json* analytic = find(*v, "analytic");
    const json* beam = find(*v, "beam");
    if ((analytic != nullptr) == (beam != nullptr)) {
      throw ConfigError("velocity", "give exactly one velocity source (analytic or beam)");
    }
    if (analytic) {
      const std::string p = "velocity.analytic";
      check_keys(*analytic, p, {"mean_m_s", "fwhm_m_s", "points"});
      AnalyticVelocity a;
      a.mean = positive(*analytic, p, "mean_m_s");
      a.fwhm = number(*analytic, p, "fwhm_m_s");
      if (a.fwhm < 0.0) throw ConfigError(join(p, "fwhm_m_s"), "must be >= 0");
      a.points = static_cast<int>(integer(*analytic, p, "points", 401));
      if (a.points < 2) throw ConfigError(join(p, "points"), "must be >= 2");
      c.velocity = a;
    } else {
      if (!beam->is_boolean() || !beam->get<bool>()) {
        throw ConfigError("velocity.beam", "expected true");
      }
      c.velocity = BeamVelocity{};
    }
  }

  if (const json* v = find(j, "visibility")) {
    check_keys(*v, "visibility", {"powers_w", "velocity_shift_m_s"});
    VisibilitySection s;
    s.powers_w = parse_powers(require(*v, "visibility", "powers_w"), "visibility.powers_w");
    s.velocity_shift = number(*v, "visibility", "velocity_shift_m_s", 5.0);
    if (s.velocity_shift < 0.0) throw ConfigError("visibility.velocity_shift_m_s", "must be >= 0");
    c.visibility = s;
  }

  if (const json* s = find(j, "scan")) {
    const std::string p = "scan";
    check_keys(*s, p, {"points", "periods", "mean_counts", "background", "phase_rad", "ensemble_seeds"});
    ScanSection sc;
    sc.points = static_cast<int>(integer(*s, p, "points", 20));
    if (sc.points < 4) throw ConfigError(join(p, "points"), "must be >= 4");
    sc.periods = positive(*s, p, "periods", 1.0);
    sc.mean_counts = positive(*s, p, "mean_counts", 250.0);
    sc.background = number(*s, p, "background", 50.0);
    if (sc.background < 0.0) throw ConfigError(join(p, "background"), "must be >= 0");
    sc.phase = number(*s, p, "phase_rad", 0.0);
    const auto seeds = integer(*s, p, "ensemble_seeds", 0);
    if (seeds < 0 || seeds == 1 || seeds > 1'000'000) {
      throw ConfigError(join(p, "ensemble_seeds"), "must be 0 or in [2, 1e6]");
    }
    sc.ensemble_seeds = static_cast<int>(seeds);
    c.scan = sc;
  }

  if (const json* l = find(j, "library")) {
    const std::string p = "library";
    check_keys(*l, p, {"file", "peaks", "tolerance_amu"});
    LibrarySection ls;
    ls.file = existing_file(*l, p, "file", base_dir);
    if (find(*l, "peaks")) ls.peaks = existing_file(*l, p, "peaks", base_dir);
    ls.tolerance_amu = positive(*l, p, "tolerance_amu", 15.0);
    c.library = ls;
  }

  if (const json* b = find(j, "beam")) c.beam = parse_beam(*b);

  if (c.velocity && std::holds_alternative<BeamVelocity>(*c.velocity) && !c.beam) {
    throw ConfigError("velocity.beam", "requires a beam section");
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("--config", "cannot open " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), path.parent_path().empty() ? "." : path.parent_path());
}

void apply_overrides(ExperimentConfig& config, const Overrides& overrides) {
  if (overrides.output_dir) config.output_dir = *overrides.output_dir;
  if (overrides.seed) config.seed = *overrides.seed;
  if (overrides.model) config.model = *overrides.model;
}

Molecule resolve_molecule(const ExperimentConfig& config) {
  if (!config.molecule) throw ConfigError("molecule", "missing section");
  const auto& spec = *config.molecule;
  Molecule m;
  m.alpha_m3 = spec.alpha_m3;
  m.sigma_abs_m2 = spec.sigma_abs_m2;
  if (const auto* ref = std::get_if<LibraryMemberRef>(&spec.source)) {
    const LibraryFile file = [&] {
      try {
        return load_library_file(ref->library_file);
      } catch (const std::exception& e) {
        throw ConfigError("molecule.library_member.library_file", e.what());
      }
    }();
    if (ref->n < file.library.n_min || ref->n > file.library.n_max) {
      throw ConfigError("molecule.library_member.n", "outside the library's substitution range");
    }
    m.composition = library_member(file.library, ref->n);
    m.mass_amu = molecular_mass(m.composition, file.masses);
  } else {
    const auto& f = std::get<ExplicitFormula>(spec.source);
    m.composition = Composition::parse(f.formula);
    m.mass_amu = f.mass_amu ? *f.mass_amu : molecular_mass(m.composition, MassTable::iupac_average());
  }
  validated("molecule", [&] { m.validate(); });
  return m;
}

}  // namespace kdtl::cli
