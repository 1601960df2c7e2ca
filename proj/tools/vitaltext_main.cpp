#include <string>
#include <vector>

#include "vitaltext/cli/commands.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return vitaltext::cli::run_cli(args);
}
