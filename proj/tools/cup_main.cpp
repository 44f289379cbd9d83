#include <iostream>

#include "cup/cli.hpp"

int main(int argc, char** argv) { return cup::run_cli(argc, argv, std::cout, std::cerr); }
