#include <iostream>

#include "levy_rotor/commands.hpp"

int main(int argc, char** argv) { return levy_rotor::cli::run(argc, argv, std::cout, std::cerr); }
