#include <iostream>

#include "advkit/cli.hpp"

int main(int argc, char** argv) { return advkit::run_cli(argc, argv, std::cout, std::cerr); }
