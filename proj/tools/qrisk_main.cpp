#include "qrisk/cli.hpp"

int main(int argc, char** argv) { return qrisk::cli::run_main(argc, argv); }
