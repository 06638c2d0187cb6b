// SPDX-License-Identifier: Apache-2.0
#include <vector>
#include <string>

#include "bridgeflow/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return bridgeflow::run_cli(args);
}
