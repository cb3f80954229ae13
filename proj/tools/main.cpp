#include <string>
#include <vector>

#include "aesurv/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return aesurv::cli::run(args);
}
