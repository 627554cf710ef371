#include "commands.hpp"

int main(int argc, char** argv) { return csvm::cli::run(argc, argv); }
