#pragma once

namespace propdetect::cli {

// Entry point for the propdetect command-line tool. Returns the process
// exit code.
int run_cli(int argc, char** argv);

}  // namespace propdetect::cli
