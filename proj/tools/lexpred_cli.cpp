#include <string>
#include <vector>

#include "lexpred/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return lexpred::cli::run(args);
}
