#include <iostream>

#include "commands.hpp"

int main(int argc, char** argv) {
    return funcirc::cli::run(std::vector<std::string>(argv, argv + argc), std::cerr);
}
