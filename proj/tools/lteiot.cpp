#include "lteiot/cli.hpp"

int main(int argc, char** argv) { return lteiot::cli::run(argc, argv); }
