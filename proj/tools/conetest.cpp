#include <iostream>

#include "conetest/cli.hpp"

int main(int argc, char** argv) { return conetest::run_cli(argc, argv, std::cout, std::cerr); }
