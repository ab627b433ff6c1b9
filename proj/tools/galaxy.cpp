#include <iostream>

#include "galaxy/cli.hpp"

int main(int argc, char** argv) { return galaxy::cli::run(argc, argv, std::cout, std::cerr); }
