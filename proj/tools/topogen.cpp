#include <iostream>

#include "topogen/cli/cli.h"

int main(int argc, char** argv) {
  return topogen::cli::run_cli({argv + 1, argv + argc}, std::cout, std::cerr);
}
