#include <iostream>

#include "cam/cli.hpp"

int main(int argc, char** argv) { return cam::run_cli(argc, argv, std::cout, std::cerr); }
