#include "stochrelax_cli.hpp"

int main(int argc, char** argv) { return stochrelax::cli::run(argc, argv); }
