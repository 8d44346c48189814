#include "grapl/cli.hpp"

int main(int argc, char** argv) { return grapl::run_cli(argc, argv); }
