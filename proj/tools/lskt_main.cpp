#include "lskt/cli/commands.hpp"

int main(int argc, char** argv) { return lskt::cli::run(argc, argv); }
