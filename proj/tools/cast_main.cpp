#include <iostream>
#include <string>
#include <vector>

#include "cast/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return cast::run_cli(args, std::cout, std::cerr);
}
