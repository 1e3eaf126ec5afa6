#include "tati/cli.hpp"
int main() { return 0; }
