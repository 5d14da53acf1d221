#include <iostream>

#include "mvom/cli.hpp"

int main(int argc, char** argv) {
  return mvom::cli::run(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
