#include <string>
#include <vector>

#include "dynproto/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return dynproto::cli::cli_main(std::move(args));
}
