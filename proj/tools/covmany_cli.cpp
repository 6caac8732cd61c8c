#include "covmany/cli.hpp"

int main(int argc, char** argv) { return covmany::run_cli(argc, argv); }
