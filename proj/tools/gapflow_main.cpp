#include <iostream>

#include "gapflow/cli.hpp"

int main(int argc, char** argv) {
  return gapflow::run_cli(argc, argv, std::cout, std::cerr);
}
