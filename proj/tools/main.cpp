#include "sparseho_cli.hpp"

int main(int argc, char** argv) { return sparseho::cli::run(argc, argv); }
