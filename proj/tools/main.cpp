#include <iostream>
#include <string>
#include <vector>

#include "platoon/cli.hpp"

int main(int argc, char** argv) {
  return platoon::cli::run(std::vector<std::string>(argv, argv + argc), std::cout,
                           std::cerr);
}
