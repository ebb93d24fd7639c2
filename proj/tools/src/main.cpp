#include "phmoe_cli/cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
  return phmoe::cli::run(std::vector<std::string>(argv, argv + argc), std::cout,
                         std::cerr);
}
