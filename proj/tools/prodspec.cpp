#include "prodspec/cli.hpp"

int main(int argc, char** argv) { return prodspec::cli::run(argc, argv); }
