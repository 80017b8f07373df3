#include <string>
#include <vector>

#include "labelforge/cli/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    return labelforge::cli::run(args);
}
