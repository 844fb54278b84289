#include "cli.hpp"

int main(int argc, char** argv) { return divens::cli::run(argc, argv); }
