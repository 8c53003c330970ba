#include "cli.hpp"

int main(int argc, char** argv) { return wmmd::cli::dispatch(argc, argv); }
