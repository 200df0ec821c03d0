#include <iostream>
#include <string>
#include <vector>

#include "salientcrop/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return salientcrop::run_command(args, std::cout, std::cerr);
}
