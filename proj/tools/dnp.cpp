#include "dnp/cli.hpp"

int main(int argc, char** argv) { return dnp::run_cli(argc, argv); }
