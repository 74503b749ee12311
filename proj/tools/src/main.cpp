#include <iostream>

#include "ercav/cli.hpp"

int main(int argc, char** argv) { return ercav::cli::dispatch(argc, argv, std::cout, std::cerr); }
