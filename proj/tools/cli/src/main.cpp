#include <iostream>

#include "jetflow_cli/app.hpp"

int main(int argc, char** argv) { return jetflow::cli::run_app(argc, argv, std::cout, std::cerr); }
