#include <iostream>

#include "efpsa/cli.hpp"

int main(int argc, char** argv) { return efpsa::cli::run(argc, argv, std::cout, std::cerr); }
