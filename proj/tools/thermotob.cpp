#include "thermotob/cli.hpp"

int main(int argc, char** argv) { return thermotob::cli::run(argc, argv); }
