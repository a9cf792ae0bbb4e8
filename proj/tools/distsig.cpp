#include "distsig/cli.hpp"

int main(int argc, char** argv) { return distsig::cli::run(argc, argv); }
