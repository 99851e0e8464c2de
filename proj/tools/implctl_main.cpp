#include <iostream>

#include "implctl/cli.hpp"

int main(int argc, char** argv) { return implctl::run_cli(argc, argv, std::cout, std::cerr); }
