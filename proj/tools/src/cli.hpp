#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace qsurr::tools {

// Runs one command line (args[0] is the program name). Returns 0 on success,
// 1 for user errors and 2 for internal failures.
int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace qsurr::tools
