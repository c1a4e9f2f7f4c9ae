#include "nhscatter/cli.hpp"

int main(int argc, char** argv) { return nhscatter::run_cli(argc, argv); }
