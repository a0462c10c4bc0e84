#include <iostream>

#include "app/pipeline.hpp"

int main(int argc, char** argv) { return prosobench::app::run_cli(argc, argv, std::cout, std::cerr); }
