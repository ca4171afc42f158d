#include "cli.hpp"

int main(int argc, char** argv) { return dgtau::cli::main_entry(argc, argv); }
