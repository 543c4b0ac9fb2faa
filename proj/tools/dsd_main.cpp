#include <iostream>
#include <string>
#include <vector>

#include "dsd/cli/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return dsd::cli::run(args, std::cout, std::cerr);
}
