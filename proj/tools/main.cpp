#include <iostream>

#include "cli.hpp"
#include "scalenet/runtime.hpp"

int main(int argc, char** argv) {
  scalenet::tune_allocator();
  return scalenet::cli::run_cli(argc, argv, std::cout, std::cerr);
}
