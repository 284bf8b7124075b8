#include "zenlda/cli.hpp"

int main(int argc, char** argv) { return zenlda::run_cli(argc, argv); }
