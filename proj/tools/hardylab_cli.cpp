#include <iostream>

#include "hardylab/cli_io.hpp"

int main(int argc, char** argv) { return hardylab::cli::run(argc, argv, std::cout, std::cerr); }
