#include <iostream>

#include "stableqp/cli.hpp"

int main(int argc, char** argv) { return stableqp::run(argc, argv, std::cout, std::cerr); }
