#include "dualview/cli.hpp"

int main(int argc, char** argv) { return dualview::cli::run_cli(argc, argv); }
