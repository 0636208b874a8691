#include "sampleguard/cli.hpp"

int main(int argc, char** argv) { return sampleguard::cli::run(argc, argv); }
