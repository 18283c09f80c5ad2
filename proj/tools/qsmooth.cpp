#include <iostream>
#include <string>
#include <vector>

#include "qsmooth/cli.hpp"

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv + 1, argv + argc);
  return qsmooth::dispatch(args, std::cout, std::cerr);
}
