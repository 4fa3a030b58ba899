/// @file degvis_main.cpp
/// @brief Thin executable wrapper around the CLI front end.

#include <degvis/cli.hpp>

int main(int argc, char** argv) { return degvis::cli::run(argc, argv); }
