#include "blowuplab/cli.hpp"

int main(int argc, char** argv) { return blowuplab::cli::run(argc, argv); }
