#include <iostream>

#include "dcgcn/cli.hpp"

int main(int argc, char** argv) { return dcgcn::run_cli(argc, argv, std::cout, std::cerr); }
