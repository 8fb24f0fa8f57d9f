#include "kdtl/composition.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <limits>
#include <vector>

namespace kdtl {
namespace {

constexpr std::array<std::string_view, 25> kKnownElements = {
    "H",  "He", "Li", "B",  "C",  "N",  "O",  "F",  "Na", "Mg", "Si", "P",  "S",
    "Cl", "K",  "Mn", "Fe", "Co", "Ni", "Cu", "Zn", "Br", "Pd", "I",  "Pt"};

}  // namespace

bool is_known_element(std::string_view symbol) {
  return std::find(kKnownElements.begin(), kKnownElements.end(), symbol) !=
         kKnownElements.end();
}

Composition Composition::parse(std::string_view text) {
  if (text.empty()) throw FormulaError("empty formula");
  Composition out;
  std::size_t i = 0;
  while (i < text.size()) {
    const std::size_t start = i;
    if (!std::isupper(static_cast<unsigned char>(text[i]))) {
      throw FormulaError("malformed formula '" + std::string(text) + "' at position " +
                         std::to_string(i) + ": expected an element symbol");
    }
    ++i;
    while (i < text.size() && std::islower(static_cast<unsigned char>(text[i]))) ++i;
    const std::string_view symbol = text.substr(start, i - start);
    if (!is_known_element(symbol)) {
      throw FormulaError("unknown element symbol '" + std::string(symbol) + "' in '" +
                         std::string(text) + "'");
    }

    Count n = 1;
    if (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
      n = 0;
      while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
        const int digit = text[i] - '0';
        if (n > (std::numeric_limits<Count>::max() - digit) / 10) {
          throw FormulaError("atom count overflows in '" + std::string(text) + "'");
        }
        n = n * 10 + digit;
        ++i;
      }
      if (n == 0) {
        throw FormulaError("zero count for '" + std::string(symbol) + "' in '" +
                           std::string(text) + "'");
      }
    }
    out.add(symbol, n);
  }
  return out;
}

std::string Composition::to_string() const {
  std::vector<std::string_view> order;
  const bool has_carbon = counts_.contains("C");
  if (has_carbon) {
    order.push_back("C");
    if (counts_.contains("H")) order.push_back("H");
  }
  for (const auto& [symbol, n] : counts_) {
    if (has_carbon && (symbol == "C" || symbol == "H")) continue;
    order.push_back(symbol);  // std::map keeps the rest alphabetical
  }
  std::string out;
  for (auto symbol : order) {
    out += symbol;
    const Count n = counts_.find(symbol)->second;
    if (n != 1) out += std::to_string(n);
  }
  return out;
}

Composition::Count Composition::count(std::string_view element) const {
  const auto it = counts_.find(element);
  return it == counts_.end() ? 0 : it->second;
}

Composition::Count Composition::total_atoms() const {
  Count total = 0;
  for (const auto& [symbol, n] : counts_) total += n;
  return total;
}

void Composition::add(std::string_view element, Count n) {
  if (!is_known_element(element)) {
    throw FormulaError("unknown element symbol '" + std::string(element) + "'");
  }
  if (n == 0) return;
  const Count updated = count(element) + n;
  if (updated < 0) {
    throw FormulaError("negative count for element " + std::string(element) + " (" +
                       std::to_string(updated) + ")");
  }
  if (updated == 0) {
    counts_.erase(counts_.find(element));
  } else {
    counts_.insert_or_assign(std::string(element), updated);
  }
}

Composition& Composition::operator+=(const Composition& other) {
  for (const auto& [symbol, n] : other.counts_) add(symbol, n);
  return *this;
}

Composition& Composition::operator-=(const Composition& other) {
  // Check first so a failed subtraction leaves *this untouched.
  for (const auto& [symbol, n] : other.counts_) {
    if (count(symbol) < n) {
      throw FormulaError("negative count for element " + symbol + " (" +
                         std::to_string(count(symbol) - n) + ")");
    }
  }
  for (const auto& [symbol, n] : other.counts_) add(symbol, -n);
  return *this;
}

Composition Composition::scaled(Count factor) const {
  if (factor < 0) throw FormulaError("negative composition scale factor");
  Composition out;
  if (factor == 0) return out;
  for (const auto& [symbol, n] : counts_) out.counts_.emplace(symbol, n * factor);
  return out;
}

}  // namespace kdtl
