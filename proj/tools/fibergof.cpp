#include <iostream>

#include "fibergof/cli.hpp"

int main(int argc, char** argv) { return fibergof::cli::main(argc, argv, std::cout, std::cerr); }
