// Validates kdtl CSV outputs: unit-annotated headers, consistent column
// counts, numeric cells outside [text] columns.
#include <iostream>

#include "CLI11.hpp"
#include "kdtl/cli/csv.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Check kdtl CSV files against the output schema"};
  std::vector<std::string> files;
  app.add_option("files", files, "CSV files")->required()->check(CLI::ExistingFile);
  CLI11_PARSE(app, argc, argv);

  int bad = 0;
  for (const auto& f : files) {
    const auto issues = kdtl::cli::validate_csv(std::filesystem::path(f));
    for (const auto& i : issues) std::cerr << f << ':' << i.line << ": " << i.message << '\n';
    if (!issues.empty()) ++bad;
    else std::cout << f << ": ok\n";
  }
  return bad == 0 ? 0 : 1;
}
