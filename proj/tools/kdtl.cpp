#include "kdtl/cli/commands.hpp"

int main(int argc, char** argv) { return kdtl::cli::run_cli(argc, argv); }
