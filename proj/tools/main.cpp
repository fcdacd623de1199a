#include "propdetect/cli/cli.hpp"

int main(int argc, char** argv) { return propdetect::cli::run_cli(argc, argv); }
