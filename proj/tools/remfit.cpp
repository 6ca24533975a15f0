#include <iostream>

#include "remfit/cli.hpp"

int main(int argc, char** argv) { return remfit::cli::run(argc, argv, std::cout, std::cerr); }
