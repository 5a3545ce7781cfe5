#include <iostream>

#include "kam/cli.hpp"

int main(int argc, char** argv) { return kam::run_cli(argc, argv, std::cout, std::cerr); }
