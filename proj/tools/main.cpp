#include <iostream>

#include "polyfactor/cli.hpp"

int main(int argc, char** argv) { return polyfactor::run_cli(argc, argv, std::cout, std::cerr); }
