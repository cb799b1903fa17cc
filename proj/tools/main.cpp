#include "cli.hpp"

int main(int argc, char** argv) { return nbsto::cli::run(argc, argv); }
