#include "entrobound/cli.hpp"

int main(int argc, char** argv) { return entrobound::cli::run(argc, argv); }
