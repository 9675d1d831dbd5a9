#include "pluripot/cli.hpp"

int main(int argc, char** argv) { return pluripot::cli::main(argc, argv); }
