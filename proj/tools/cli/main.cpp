#include <iostream>

#include "promptopt/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return promptopt::cli::run(args, promptopt::cli::Io{std::cout, std::cerr});
}
