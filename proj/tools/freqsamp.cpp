#include <iostream>

#include "freqsamp/cli.hpp"

int main(int argc, char** argv) {
  return freqsamp::run_cli(argc, argv, std::cout, std::cerr);
}
