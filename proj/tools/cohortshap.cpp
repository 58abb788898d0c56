#include <iostream>

#include "cohortshap/cli/commands.hpp"

int main(int argc, char** argv) {
  return cohortshap::cli::run_cli(argc, argv, std::cout, std::cerr);
}
