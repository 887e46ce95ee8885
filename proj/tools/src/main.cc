#include <iostream>

#include "hycon/cli.h"

int main(int argc, char** argv) { return hycon::run_cli(argc, argv, std::cout, std::cerr); }
