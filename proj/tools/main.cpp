#include "cli.hpp"

int main(int argc, char** argv) { return photocorr::cli::run(argc, argv); }
