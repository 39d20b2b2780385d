#include <iostream>

#include "drift/cli.hpp"

int main(int argc, char** argv) { return drift::run_cli(argc, argv, std::cout, std::cerr); }
