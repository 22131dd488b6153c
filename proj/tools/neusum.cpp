#include "neusum/cli.hpp"

int main(int argc, char** argv) { return neusum::cli::run_cli(argc, argv); }
