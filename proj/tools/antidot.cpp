#include <antidot/cli.hpp>

#include <iostream>

int main(int argc, char** argv) { return antidot::cli::run(argc, argv, std::cout, std::cerr); }
