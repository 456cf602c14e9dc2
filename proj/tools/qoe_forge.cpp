#include <iostream>

#include "qoe/cli.hpp"

int main(int argc, char** argv) {
  return qoe::run_cli({argv + 1, argv + argc}, std::cout, std::cerr);
}
