#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace uenl {

// Runs the uenl command line (argv[0] is the program name). Returns 0 on
// success, 1 when the command fails and 2 on a usage error; failures print
// a single "uenl: error: ..." line to `err`.
int RunCli(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err);

}  // namespace uenl
