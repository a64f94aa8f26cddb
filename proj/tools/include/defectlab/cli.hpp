#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace defectlab::cli {

/// Runs one subcommand. `args` excludes the program name.
/// Returns 0 on success, 1 on validation errors, 2 on runtime failures.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int dispatch(int argc, char** argv);

}  // namespace defectlab::cli
