#include "vulnval/cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return vulnval::run_cli(args, std::cout, std::cerr);
}
