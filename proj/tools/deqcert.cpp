#include "deqcert/cli.hpp"

int main(int argc, char** argv) { return deqcert::cli::run(argc, argv); }
