#include <iostream>
#include <string>
#include <vector>

#include "atmg/cli.hpp"

int main(int argc, char** argv) {
  return atmg::cli::run_cli(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
