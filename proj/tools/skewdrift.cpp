#include <iostream>

#include "skewdrift/cli.hpp"

int main(int argc, char** argv) { return skewdrift::run_cli(argc, argv, std::cout, std::cerr); }
