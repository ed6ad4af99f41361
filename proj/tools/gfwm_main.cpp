#include "gfwm/cli.hpp"

int main(int argc, char** argv) { return gfwm::cli::dispatch(argc, argv); }
