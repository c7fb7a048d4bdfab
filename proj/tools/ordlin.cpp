#include <iostream>

#include "ordlin/cli.hpp"

int main(int argc, char** argv) { return ordlin::cli_main(argc, argv, std::cout, std::cerr); }
