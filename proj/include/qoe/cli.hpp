#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace qoe {

// Entry point of the qoe-forge tool. `args` excludes the program name.
// Returns 0 on success, 1 on usage or validation errors, 2 on I/O errors.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace qoe
