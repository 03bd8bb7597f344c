#include <iostream>

#include "uavtl/cli.hpp"

int main(int argc, char** argv) { return uavtl::cli::run(argc, argv, std::cout, std::cerr); }
