#include <iostream>
#include <string>
#include <vector>

#include "osdet/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return osdet::cli::run(args, std::cout, std::cerr);
}
