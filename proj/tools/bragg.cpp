#include "bragg/cli.hpp"

int main(int argc, char** argv) { return bragg::cli_dispatch(argc, argv); }
