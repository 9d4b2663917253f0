#include <iostream>

#include "ldprec/cli.hpp"

int main(int argc, char** argv) { return ldprec::run_cli(argc, argv, std::cout, std::cerr); }
