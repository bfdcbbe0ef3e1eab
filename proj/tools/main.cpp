#include <iostream>

#include "strongenv/cli.hpp"

int main(int argc, char** argv)
{
    return strongenv::run_cli(argc, argv, std::cout, std::cerr);
}
