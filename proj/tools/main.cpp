#include "pipeline.hpp"

int main(int argc, char** argv) { return scimet::cli::main_entry(argc, argv); }
