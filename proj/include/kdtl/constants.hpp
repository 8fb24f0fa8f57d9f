#pragma once

#include <numbers>
#include <string_view>

namespace kdtl {

// CODATA 2018 recommended values; the SI-defining constants are exact.
// data/constants.txt mirrors this table and is checked against it in tests.
struct PhysicalConstants {
  static constexpr std::string_view vintage = "CODATA 2018";

  static constexpr double h = 6.62607015e-34;             // J s (exact)
  static constexpr double hbar = h / (2.0 * std::numbers::pi);  // J s
  static constexpr double c = 299792458.0;                // m/s (exact)
  static constexpr double k_B = 1.380649e-23;             // J/K (exact)
  static constexpr double amu_to_kg = 1.66053906660e-27;  // kg
  static constexpr double g_gravity = 9.80665;            // m/s^2, standard gravity
};

}  // namespace kdtl
