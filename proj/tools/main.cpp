#include "cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return h2cgl::cli::run(argc, argv, std::cout, std::cerr); }
