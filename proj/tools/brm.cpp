#include <iostream>

#include "brm/runner.hpp"

int main(int argc, char** argv) { return brm::cli_main(argc, argv, std::cout, std::cerr); }
