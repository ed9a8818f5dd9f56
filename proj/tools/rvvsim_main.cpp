#include <iostream>
#include <string>
#include <vector>

#include "rvv/cli/app.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return rvv::run_cli(args, std::cout, std::cerr);
}
