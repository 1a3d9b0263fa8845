#include <string>
#include <vector>

#include "iceberg/workbench.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return iceberg::workbench::run_cli(args);
}
