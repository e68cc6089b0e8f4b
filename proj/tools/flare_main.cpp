#include <iostream>
#include <string>
#include <vector>

#include "flare/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return flare::cli::run(args, std::cout, std::cerr);
}
