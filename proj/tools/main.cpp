#include <iostream>

#include "runner.hpp"

int main(int argc, char** argv) { return spinglass::cli::run(argc, argv, std::cout, std::cerr); }
