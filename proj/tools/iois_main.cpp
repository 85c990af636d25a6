#include "iois/cli.hpp"

int main(int argc, char** argv) { return iois::run_cli(argc, argv); }
