#include "mrmp/cli.hpp"

int main(int argc, char** argv) { return mrmp::cli_main(argc, argv); }
