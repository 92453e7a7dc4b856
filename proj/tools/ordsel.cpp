#include "ordsel/cli.hpp"

int main(int argc, char** argv) { return ordsel::cli::run(argc, argv); }
