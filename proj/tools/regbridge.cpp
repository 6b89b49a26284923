#include <iostream>

#include "regbridge/cli.hpp"

int main(int argc, char** argv) {
    return regbridge::cli::main_entry(argc, argv, std::cout, std::cerr);
}
