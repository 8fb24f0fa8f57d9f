#pragma once

// Mass arithmetic for a substitution library: members
//   member(n) = core - n * leaving_group + n * added_group
// are equally spaced in mass by mass(added) - mass(leaving).

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "kdtl/composition.hpp"

namespace kdtl {

/// Error in a data file, tagged with the 1-based line it came from
/// (0 when the problem is not tied to a line).
class DataFileError : public std::runtime_error {
 public:
  DataFileError(const std::filesystem::path& file, int line, const std::string& what);
  int line() const { return line_; }

 private:
  int line_;
};

/// Average atomic masses in amu.
class MassTable {
 public:
  /// IUPAC standard atomic weights (conventional values for elements with
  /// an interval) for the elements the formula parser knows.
  static const MassTable& iupac_average();

  MassTable(std::map<std::string, double, std::less<>> masses, std::string provenance);

  std::optional<double> mass(std::string_view element) const;
  const std::string& provenance() const { return provenance_; }
  const std::map<std::string, double, std::less<>>& masses() const { return masses_; }

 private:
  std::map<std::string, double, std::less<>> masses_;
  std::string provenance_;
};

/// Sum of count * mass. Throws FormulaError naming the first element
/// missing from the table.
double molecular_mass(const Composition& composition, const MassTable& table);

struct MolecularLibrary {
  std::string name;
  Composition core;
  Composition leaving_group;
  Composition added_group;
  int n_min = 0;
  int n_max = 0;

  /// Throws FormulaError when the range is inverted/negative or the core
  /// cannot supply n_max leaving groups.
  void validate() const;
};

struct LibraryMember {
  int n = 0;
  Composition composition;
  double mass_amu = 0.0;
};

/// One member per n in [n_min, n_max].
std::vector<LibraryMember> build_library(const MolecularLibrary& library, const MassTable& table);

/// Composition of member n. Throws FormulaError identifying n and the
/// element whose count would turn negative.
Composition library_member(const MolecularLibrary& library, int n);

struct Peak {
  double mz = 0.0;
  double intensity_percent = 0.0;
};

struct PeakAssignment {
  double mz = 0.0;
  double intensity_percent = 0.0;
  std::optional<int> n;  // nearest member within tolerance
  int nearest_n = 0;     // nearest member regardless of tolerance
  double residual = 0.0;  // mz - mass(nearest member)
  bool tie = false;       // two members equidistant; the lower n was taken
};

/// Nearest-neighbour match of each peak against the member masses with a
/// hard tolerance window. Unmatched peaks keep n empty.
std::vector<PeakAssignment> assign_peaks(std::span<const LibraryMember> members,
                                         std::span<const Peak> peaks, double tolerance_amu);

struct LibraryFile {
  MolecularLibrary library;
  MassTable masses;
};

/// Reads a library definition. Line-oriented "key = value" text:
///
///   # comment
///   name = fluorous porphyrin library L
///   core = C44H10F20N4
///   leaving_group = F
///   added_group = C20H15F26S
///   n_min = 0
///   n_max = 20
///   [mass_table]            (optional; IUPAC averages otherwise)
///   provenance = ...
///   C = 12.011
///
/// Errors carry the offending line number.
LibraryFile load_library_file(const std::filesystem::path& path);

/// Two-column delimited text (m/z, intensity %), comma, tab or whitespace
/// separated. Blank lines and '#' comments are skipped, as is a single
/// non-numeric header line.
std::vector<Peak> load_peaks(const std::filesystem::path& path);

}  // namespace kdtl
