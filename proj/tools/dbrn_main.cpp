#include "dbrn/cli.hpp"

int main(int argc, char** argv) { return dbrn::run_cli(argc, argv); }
