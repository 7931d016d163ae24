#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sbts::cli {

/// Runs one command line (args[0] is the program name). Returns the process
/// exit code; failures print a single "error: <category>: <message>" line.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sbts::cli
