#include <string>
#include <vector>

#include "fvsr/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return fvsr::cli::run(args);
}
