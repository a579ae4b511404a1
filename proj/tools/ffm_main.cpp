#include "ffm/cli.hpp"

int main(int argc, char** argv) { return ffm::run_cli(argc, argv); }
