#include <iostream>
#include <string>
#include <vector>

#include "homlab/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return homlab::run(args, std::cout, std::cerr);
}
