#include <iostream>

#include "riskbandit/cli/app.hpp"

int main(int argc, char** argv) {
  return riskbandit::cli::run_cli(argc, argv, std::cout, std::cerr);
}
