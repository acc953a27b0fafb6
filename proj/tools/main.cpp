#include "sphase/io.hpp"

int main(int argc, char** argv) { return sphase::cli_main(argc, argv); }
