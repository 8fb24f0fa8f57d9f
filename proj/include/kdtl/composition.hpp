#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>

namespace kdtl {

class FormulaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Multiset of atoms keyed by element symbol. Zero counts are never stored.
class Composition {
 public:
  using Count = std::int64_t;

  Composition() = default;

  /// Parses an element-count formula such as "C284H190F320N4S12".
  /// Element symbols must be in the known periodic-table subset.
  static Composition parse(std::string_view text);

  /// Hill order: C, then H, then the rest alphabetically. Without carbon
  /// everything (H included) is alphabetical.
  std::string to_string() const;

  Count count(std::string_view element) const;
  Count total_atoms() const;
  bool empty() const { return counts_.empty(); }
  const std::map<std::string, Count, std::less<>>& counts() const { return counts_; }

  /// Adds n atoms (n may be negative). Throws FormulaError for an unknown
  /// symbol or if the count would go below zero.
  void add(std::string_view element, Count n);

  Composition& operator+=(const Composition& other);
  /// Throws FormulaError when any element count would turn negative.
  Composition& operator-=(const Composition& other);
  Composition scaled(Count factor) const;

  friend Composition operator+(Composition a, const Composition& b) { return a += b; }
  friend Composition operator-(Composition a, const Composition& b) { return a -= b; }
  friend bool operator==(const Composition&, const Composition&) = default;

 private:
  std::map<std::string, Count, std::less<>> counts_;
};

/// True for symbols the formula parser accepts.
bool is_known_element(std::string_view symbol);

}  // namespace kdtl
