#include <iostream>

#include "tmatch/cli.hpp"

int main(int argc, char** argv) { return tmatch::run_cli(argc, argv, std::cout, std::cerr); }
