#include "cli.hpp"

int main(int argc, char** argv) { return nonrev::cli::run(argc, argv); }
