#include <iostream>
#include <string>
#include <vector>

#include "specloop/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return specloop::run_command(args, std::cout, std::cerr);
}
