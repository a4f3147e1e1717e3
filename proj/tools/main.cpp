#include <iostream>

#include "mkdepth/cli.hpp"

int main(int argc, char** argv) { return mkdepth::run_cli(argc, argv, std::cout, std::cerr); }
