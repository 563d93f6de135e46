#include <iostream>

#include "exwkb/cli.hpp"

int main(int argc, char** argv) { return exwkb::cli::run(argc, argv, std::cout, std::cerr); }
