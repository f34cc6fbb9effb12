#include "reachkit/cli.hpp"

int main(int argc, char** argv) { return reachkit::cli::main(argc, argv); }
