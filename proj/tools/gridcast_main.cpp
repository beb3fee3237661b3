#include <string>
#include <vector>

#include "gridcast/cli.hpp"

int main(int argc, char** argv) {
  return gridcast::run_cli(std::vector<std::string>(argv + 1, argv + argc));
}
