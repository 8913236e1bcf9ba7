#include "dbi/cli.hpp"

int main(int argc, char** argv) { return dbi::cli_dispatch(argc, argv); }
