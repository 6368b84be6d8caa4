#include <iostream>

#include "uqbench/commands.hpp"

int main(int argc, char** argv) { return uqbench::cli::run(argc, argv, std::cout, std::cerr); }
