#include "defectlab/cli.hpp"

int main(int argc, char** argv) { return defectlab::cli::dispatch(argc, argv); }
