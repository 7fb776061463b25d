#include "vflux/cli.hpp"

int main(int argc, char** argv) {
    return vflux::cli::run(argc, argv);
}
