#include "tati/cli.hpp"

int main(int argc, char** argv) { return tati::cli::dispatch(argc, argv); }
