#include "fnreg/cli.hpp"

int main(int argc, char** argv) { return fnreg::run_cli(argc, argv); }
