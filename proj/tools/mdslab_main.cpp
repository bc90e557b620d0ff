#include <iostream>

#include "mdslab/experiment.hpp"

int main(int argc, char **argv) { return mdslab::cli_main(argc, argv, std::cout, std::cerr); }
