#include <iostream>

#include "dhap/cli.hpp"

int main(int argc, char** argv) { return dhap::cli::run(argc, argv, std::cin, std::cout, std::cerr); }
