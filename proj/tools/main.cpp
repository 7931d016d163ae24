#include <iostream>
#include <string>
#include <vector>

#include "sbts/cli.hpp"

int main(int argc, char** argv) {
  return sbts::cli::run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
