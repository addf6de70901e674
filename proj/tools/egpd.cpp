#include <iostream>

#include "egpd/cli.hpp"

int main(int argc, char** argv) { return egpd::run_cli(argc, argv, std::cout, std::cerr); }
