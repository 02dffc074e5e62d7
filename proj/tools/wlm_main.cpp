#include "wlm/cli.hpp"

int main(int argc, char** argv) { return wlm::main_entry(argc, argv); }
