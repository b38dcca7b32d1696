#include "twinhet/cli.hpp"

int main(int argc, char** argv) { return twinhet::cli::run(argc, argv); }
