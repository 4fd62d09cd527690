#include "cli.hpp"

int main(int argc, char** argv) { return zkaudit::cli::run(argc, argv); }
