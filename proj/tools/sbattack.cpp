#include <iostream>

#include "sbattack/cli.hpp"

int main(int argc, char** argv) { return sbattack::run_cli(argc, argv, std::cout, std::cerr); }
