#include <iostream>

#include "hybridjd/cli.hpp"

int main(int argc, char** argv) {
    return hybridjd::run_cli(argc, argv, std::cout, std::cerr);
}
