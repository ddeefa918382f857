#include "reflect/cli.hpp"

int main(int argc, char** argv) { return reflect::cli_main(argc, argv); }
