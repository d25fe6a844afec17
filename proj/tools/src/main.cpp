#include "latwalk_cli/cli.hpp"

int main(int argc, char** argv) { return latwalk::cli::main(argc, argv); }
