#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace longqa::cli {

// Parses `args` (without the program name), runs the command and returns the
// process exit code: 0 ok, 2 config, 3 transport, 4 fixture miss, 5 pipeline.
// Diagnostics, including log lines, go to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace longqa::cli
