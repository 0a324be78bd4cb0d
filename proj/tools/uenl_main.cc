#include <iostream>
#include <string>
#include <vector>

#include "uenl/cli.h"

int main(int argc, char** argv) {
  return uenl::RunCli(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
