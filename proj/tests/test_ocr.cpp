#include <catch2/catch_amalgamated.hpp>
#include "tati/cli.hpp"
