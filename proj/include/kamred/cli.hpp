#pragma once

#include <string>
#include <vector>

namespace kamred {

// Runs one `kamred` subcommand; returns 0, 2 (validation), 3 (numerical) or 4 (I/O).
int dispatch(const std::vector<std::string>& args);

} // namespace kamred
