#include <iostream>

#include "spilloverfree/cli.hpp"

int main(int argc, char** argv) { return spillfree::cli_run(argc, argv, std::cout, std::cerr); }
