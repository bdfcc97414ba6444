#include <iostream>

#include "atelier/cli.hpp"

int main(int argc, char** argv) { return atelier::cli::run(argc, argv, std::cout, std::cerr); }
