#include "cli.hpp"

int main(int argc, char** argv) { return limeattack::cli::run(argc, argv); }
