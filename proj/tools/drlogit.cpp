#include "drlogit/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return drlogit::run_cli(argc, argv, std::cout, std::cerr); }
