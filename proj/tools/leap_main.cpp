#include "leap/harness/cli.hpp"

int main(int argc, char** argv) { return leap::harness::run_cli(argc, argv); }
