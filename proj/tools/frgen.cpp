#include "frgen/cli.hpp"

int main(int argc, char** argv) { return frgen::run_cli(argc, argv); }
