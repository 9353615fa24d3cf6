#include "causalkit/cli.hpp"

int main(int argc, char** argv) { return causalkit::run_cli(argc, argv); }
