#include <iostream>

#include "dspg/cli/commands.hpp"

int main(int argc, char** argv) { return dspg::cli::run_cli(argc, argv, std::cout, std::cerr); }
