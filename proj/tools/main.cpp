#include "neoeeg/cli/cli.hpp"

int main(int argc, char** argv) { return neoeeg::cli::run_cli(argc, argv); }
