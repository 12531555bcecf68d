#pragma once

namespace leap::harness {

// Entry point for the leap command-line tool; returns the process exit code.
int run_cli(int argc, const char* const* argv);

}  // namespace leap::harness
