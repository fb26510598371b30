#include "loclab/runner.hpp"

int main(int argc, char** argv) { return loclab::cli_main(argc, argv); }
