#include "gesturelab/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return gesturelab::cli::run(argc, argv, std::cout, std::cerr); }
