#include "lpca_cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return lpca::cli::run_cli(argc, argv, std::cout, std::cerr); }
