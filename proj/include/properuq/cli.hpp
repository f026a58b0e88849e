#ifndef PROPERUQ_CLI_HPP
#define PROPERUQ_CLI_HPP

#include <ostream>
#include <string>
#include <vector>

namespace properuq {

// Dispatches one command line (without the program name) and writes reports
// to `out` (or the file given by --out) and diagnostics to `err`.
// Returns 0 on success, 2 on a usage error, 1 on a computation error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace properuq

#endif
