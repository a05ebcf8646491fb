#include "drt/cli.hpp"

int main(int argc, char** argv) { return drt::run_cli(argc, argv); }
