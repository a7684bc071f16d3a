#include "bayesdecide/cli.hpp"

#include <iostream>

int main(int argc, char **argv) {
  return bayesdecide::cli::dispatch(argc, argv, std::cout, std::cerr);
}
