#include <iostream>

#include "mamf/cli.hpp"

int main(int argc, char** argv) { return mamf::cli::run(argc, argv, std::cout, std::cerr); }
