#include "cepred/harness.hpp"

int main(int argc, char** argv) { return cepred::cli_main(argc, argv); }
