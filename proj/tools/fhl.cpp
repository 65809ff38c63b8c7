#include <iostream>
#include <string>
#include <vector>

#include "fhl/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return fhl::cli::main_entry(args, std::cout, std::cerr);
}
