#include "kdtl/cli/csv.hpp"

#include <fstream>
#include <regex>
#include <sstream>
#include <stdexcept>

#include "kdtl/detail/text.hpp"

namespace kdtl::cli {

void write_csv(std::ostream& out, const CsvTable& table) {
  for (const auto& c : table.comments) out << "# " << c << '\n';
  for (std::size_t i = 0; i < table.header.size(); ++i) {
    out << (i ? "," : "") << table.header[i];
  }
  out << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << '\n';
  }
}

void write_csv(const std::filesystem::path& path, const CsvTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_csv(out, table);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::vector<CsvIssue> validate_csv(std::istream& in) {
  static const std::regex column(R"(^[A-Za-z][A-Za-z0-9_+\-.]* \[[^\[\]]+\]$)");
  std::vector<CsvIssue> issues;
  std::vector<bool> is_text;
  int lineno = 0;
  bool have_header = false;
  int rows = 0;
  for (std::string raw; std::getline(in, raw);) {
    ++lineno;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    if (!have_header) {
      if (!raw.empty() && raw.front() == '#') continue;
      std::stringstream ss(raw);
      for (std::string cell; std::getline(ss, cell, ',');) {
        if (!std::regex_match(cell, column)) {
          issues.push_back({lineno, "header column '" + cell + "' is not of the form 'name [unit]'"});
        }
        is_text.push_back(cell.size() >= 6 && cell.ends_with("[text]"));
      }
      if (is_text.empty()) issues.push_back({lineno, "empty header"});
      have_header = true;
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ss(raw);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    if (!raw.empty() && raw.back() == ',') cells.emplace_back();
    if (cells.size() != is_text.size()) {
      issues.push_back({lineno, "expected " + std::to_string(is_text.size()) + " cells, got " +
                                    std::to_string(cells.size())});
      continue;
    }
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (!is_text[i] && !detail::parse_double(cells[i])) {
        issues.push_back({lineno, "cell " + std::to_string(i + 1) + " is not numeric: '" + cells[i] + "'"});
      }
    }
    ++rows;
  }
  if (!have_header) issues.push_back({lineno, "no header line"});
  else if (rows == 0) issues.push_back({lineno, "no data rows"});
  return issues;
}

std::vector<CsvIssue> validate_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return {{0, "cannot open " + path.string()}};
  return validate_csv(in);
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t value) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[i] = digits[value & 0xF];
    value >>= 4;
  }
  return out;
}

std::string file_digest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return hex64(fnv1a64(ss.str()));
}

}  // namespace kdtl::cli
