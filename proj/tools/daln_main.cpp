#include "daln/cli.hpp"

int main(int argc, char** argv) { return daln::cli::run(argc, argv); }
