#include "morpho/cli.hpp"

int main(int argc, char** argv) { return morpho::command_dispatch(argc, argv); }
