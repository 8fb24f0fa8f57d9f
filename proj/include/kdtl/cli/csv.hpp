#pragma once

// CSV outputs carry unit-annotated headers, "name [unit]". Columns whose
// unit is "text" hold free text; every other cell must be numeric. Lines
// starting with '#' before the header are metadata.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace kdtl::cli {

struct CsvTable {
  std::vector<std::string> comments;  // written as "# ..." lines
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

void write_csv(std::ostream& out, const CsvTable& table);
void write_csv(const std::filesystem::path& path, const CsvTable& table);

struct CsvIssue {
  int line = 0;
  std::string message;
};

std::vector<CsvIssue> validate_csv(std::istream& in);
std::vector<CsvIssue> validate_csv(const std::filesystem::path& path);

std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t value);
std::string file_digest(const std::filesystem::path& path);

}  // namespace kdtl::cli
