#include "hjres/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return hjres::cli::run(argc, argv, std::cout, std::cerr); }
