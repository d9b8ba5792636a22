#include "stvar/cli.hpp"

int main(int argc, char** argv) { return stvar::cli::dispatch(argc, argv); }
