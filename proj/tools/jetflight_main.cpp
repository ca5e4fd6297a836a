#include <iostream>
#include <string>
#include <vector>

#include "jetflight/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return jetflight::cli::run(args, std::cout, std::cerr);
}
