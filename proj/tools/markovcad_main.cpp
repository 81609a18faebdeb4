#include <iostream>
#include <string>
#include <vector>

#include "markovcad/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return mc::run(args, std::cout, std::cerr);
}
