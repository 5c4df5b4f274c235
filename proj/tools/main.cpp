#include <iostream>
#include <string>
#include <vector>

#include "hsd/cli.hpp"

int main(int argc, char** argv) {
  return hsd::cli::run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
