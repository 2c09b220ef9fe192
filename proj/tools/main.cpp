#include "cli.hpp"

int main(int argc, char** argv) { return plumerl::cli::run(argc, argv); }
