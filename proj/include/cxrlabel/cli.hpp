#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cxrlabel::cli {

/// Runs one subcommand. `args` excludes the program name. Returns the
/// process exit code: 0 ok, 1 usage, 2 input, 3 compute, 4 transport.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cxrlabel::cli
