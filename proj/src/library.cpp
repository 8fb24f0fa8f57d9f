#include "kdtl/library.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include "kdtl/detail/text.hpp"

namespace kdtl {

DataFileError::DataFileError(const std::filesystem::path& file, int line,
                             const std::string& what)
    : std::runtime_error(file.string() + (line > 0 ? ":" + std::to_string(line) : "") + ": " +
                         what),
      line_(line) {}

const MassTable& MassTable::iupac_average() {
  static const MassTable table(
      {
          {"H", 1.008},       {"He", 4.002602},    {"Li", 6.94},       {"B", 10.81},
          {"C", 12.011},      {"N", 14.007},       {"O", 15.999},      {"F", 18.998403162},
          {"Na", 22.98976928}, {"Mg", 24.305},     {"Si", 28.085},     {"P", 30.973761998},
          {"S", 32.06},       {"Cl", 35.45},       {"K", 39.0983},     {"Mn", 54.938043},
          {"Fe", 55.845},     {"Co", 58.933194},   {"Ni", 58.6934},    {"Cu", 63.546},
          {"Zn", 65.38},      {"Br", 79.904},      {"Pd", 106.42},     {"I", 126.90447},
          {"Pt", 195.084},
      },
      "IUPAC standard atomic weights, conventional values (CIAAW 2021)");
  return table;
}

MassTable::MassTable(std::map<std::string, double, std::less<>> masses, std::string provenance)
    : masses_(std::move(masses)), provenance_(std::move(provenance)) {
  for (const auto& [symbol, m] : masses_) {
    if (!(m > 0.0)) throw FormulaError("atomic mass of " + symbol + " must be positive");
  }
}

std::optional<double> MassTable::mass(std::string_view element) const {
  const auto it = masses_.find(element);
  if (it == masses_.end()) return std::nullopt;
  return it->second;
}

double molecular_mass(const Composition& composition, const MassTable& table) {
  double total = 0.0;
  for (const auto& [symbol, n] : composition.counts()) {
    const auto m = table.mass(symbol);
    if (!m) throw FormulaError("element " + symbol + " missing from mass table");
    total += static_cast<double>(n) * *m;
  }
  return total;
}

void MolecularLibrary::validate() const {
  if (n_min < 0 || n_max < n_min) {
    throw FormulaError("invalid substitution range " + std::to_string(n_min) + ".." +
                       std::to_string(n_max));
  }
  if (leaving_group.empty() && added_group.empty()) {
    throw FormulaError("library needs a leaving or an added group");
  }
  for (const auto& [symbol, n] : leaving_group.counts()) {
    if (core.count(symbol) < n * n_max) {
      throw FormulaError("core " + core.to_string() + " cannot supply " +
                         std::to_string(n_max) + " leaving groups " +
                         leaving_group.to_string());
    }
  }
}

Composition library_member(const MolecularLibrary& library, int n) {
  if (n < 0) throw FormulaError("negative substitution count " + std::to_string(n));
  try {
    return library.core - library.leaving_group.scaled(n) + library.added_group.scaled(n);
  } catch (const FormulaError& e) {
    throw FormulaError("member n = " + std::to_string(n) + ": " + e.what());
  }
}

std::vector<LibraryMember> build_library(const MolecularLibrary& library, const MassTable& table) {
  library.validate();
  std::vector<LibraryMember> members;
  members.reserve(static_cast<std::size_t>(library.n_max - library.n_min + 1));
  for (int n = library.n_min; n <= library.n_max; ++n) {
    auto composition = library_member(library, n);
    const double mass = molecular_mass(composition, table);
    members.push_back({n, std::move(composition), mass});
  }
  return members;
}

std::vector<PeakAssignment> assign_peaks(std::span<const LibraryMember> members,
                                         std::span<const Peak> peaks, double tolerance_amu) {
  if (!(tolerance_amu > 0.0)) throw std::domain_error("peak tolerance must be positive");
  std::vector<PeakAssignment> out;
  out.reserve(peaks.size());
  for (const auto& peak : peaks) {
    PeakAssignment a{peak.mz, peak.intensity_percent, std::nullopt, 0,
                     std::numeric_limits<double>::infinity(), false};
    double best = std::numeric_limits<double>::infinity();
    for (const auto& m : members) {
      const double dist = std::abs(peak.mz - m.mass_amu);
      const double eps = 1e-12 * std::max(1.0, peak.mz);
      if (dist < best - eps) {
        best = dist;
        a.nearest_n = m.n;
        a.residual = peak.mz - m.mass_amu;
        a.tie = false;
      } else if (std::abs(dist - best) <= eps) {
        a.tie = true;
        if (m.n < a.nearest_n) {
          a.nearest_n = m.n;
          a.residual = peak.mz - m.mass_amu;
        }
      }
    }
    if (best <= tolerance_amu) a.n = a.nearest_n;
    out.push_back(a);
  }
  return out;
}

namespace {

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataFileError(path, 0, "cannot open file");
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(std::move(line));
  return lines;
}

}  // namespace

LibraryFile load_library_file(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  std::map<std::string, std::pair<std::string, int>, std::less<>> keys;
  std::map<std::string, double, std::less<>> masses;
  std::string provenance;
  bool in_mass_table = false;
  bool saw_mass_table = false;

  for (std::size_t i = 0; i < lines.size(); ++i) {
    const int lineno = static_cast<int>(i) + 1;
    auto line = detail::trim(lines[i]);
    if (line.empty() || line.front() == '#') continue;
    if (line.front() == '[') {
      if (line != "[mass_table]") throw DataFileError(path, lineno, "unknown section " + std::string(line));
      in_mass_table = saw_mass_table = true;
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw DataFileError(path, lineno, "expected 'key = value'");
    const std::string key(detail::trim(line.substr(0, eq)));
    const std::string value(detail::trim(line.substr(eq + 1)));
    if (key.empty()) throw DataFileError(path, lineno, "empty key");

    if (in_mass_table) {
      if (key == "provenance") {
        provenance = value;
        continue;
      }
      if (!is_known_element(key)) throw DataFileError(path, lineno, "unknown element " + key);
      const auto m = detail::parse_double(value);
      if (!m || !(*m > 0.0)) throw DataFileError(path, lineno, "bad atomic mass '" + value + "'");
      if (!masses.emplace(key, *m).second) throw DataFileError(path, lineno, "duplicate element " + key);
      continue;
    }
    if (!keys.emplace(key, std::pair{value, lineno}).second) {
      throw DataFileError(path, lineno, "duplicate key " + key);
    }
  }

  auto require = [&](std::string_view key) -> const std::pair<std::string, int>& {
    const auto it = keys.find(key);
    if (it == keys.end()) throw DataFileError(path, 0, "missing key '" + std::string(key) + "'");
    return it->second;
  };
  auto formula = [&](std::string_view key) {
    const auto& [value, lineno] = require(key);
    try {
      return Composition::parse(value);
    } catch (const FormulaError& e) {
      throw DataFileError(path, lineno, e.what());
    }
  };
  auto integer = [&](std::string_view key) {
    const auto& [value, lineno] = require(key);
    const auto v = detail::parse_integer(value);
    if (!v || *v < 0 || *v > 10000) {
      throw DataFileError(path, lineno, "bad integer for " + std::string(key) + ": '" + value + "'");
    }
    return static_cast<int>(*v);
  };

  MolecularLibrary lib;
  if (auto it = keys.find("name"); it != keys.end()) lib.name = it->second.first;
  lib.core = formula("core");
  lib.leaving_group = formula("leaving_group");
  lib.added_group = formula("added_group");
  lib.n_min = integer("n_min");
  lib.n_max = integer("n_max");
  try {
    lib.validate();
  } catch (const FormulaError& e) {
    throw DataFileError(path, require("n_max").second, e.what());
  }

  if (!saw_mass_table) return {std::move(lib), MassTable::iupac_average()};
  if (masses.empty()) throw DataFileError(path, 0, "[mass_table] section is empty");
  return {std::move(lib), MassTable(std::move(masses), provenance)};
}

std::vector<Peak> load_peaks(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  std::vector<Peak> peaks;
  bool header_seen = false;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const int lineno = static_cast<int>(i) + 1;
    const auto line = detail::trim(lines[i]);
    if (line.empty() || line.front() == '#') continue;
    const auto fields = detail::split_fields(line);
    if (fields.size() != 2) throw DataFileError(path, lineno, "expected two columns (m/z, intensity)");
    const auto mz = detail::parse_double(fields[0]);
    const auto intensity = detail::parse_double(fields[1]);
    if (!mz || !intensity) {
      if (!header_seen && peaks.empty()) {
        header_seen = true;
        continue;
      }
      throw DataFileError(path, lineno, "non-numeric field");
    }
    if (!(*mz > 0.0)) throw DataFileError(path, lineno, "m/z must be positive");
    if (!(*intensity >= 0.0)) throw DataFileError(path, lineno, "intensity must be >= 0");
    peaks.push_back({*mz, *intensity});
  }
  return peaks;
}

}  // namespace kdtl
