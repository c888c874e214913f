#include "entype/commands.hpp"

int main(int argc, char** argv) { return entype::run_cli(argc, argv); }
