#include <iostream>
#include <string>
#include <vector>

#include "labyrinth/cli.hpp"

int main(int argc, char** argv) {
    return labyrinth::run_cli(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
