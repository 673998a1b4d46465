#include <iostream>

#include "bpf/cli.hpp"

int main(int argc, char** argv) { return bpf::cli::run(argc, argv, std::cout, std::cerr); }
