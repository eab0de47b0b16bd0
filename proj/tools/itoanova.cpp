#include "itoanova/cli.hpp"

int main(int argc, char** argv) { return itoanova::cli::run(argc, argv); }
