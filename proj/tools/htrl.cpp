#include "htrl/harness.hpp"

int main(int argc, char** argv) { return htrl::run_cli(argc, argv); }
