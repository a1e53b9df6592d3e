#pragma once

#include <string>
#include <vector>

#include "mrmp/tensor.hpp"

namespace mrmp {

// Rate-list grammar: comma-separated entries, each a single value or an
// inclusive "start:stop:step" range, e.g. "0.5:0.95:0.05,0.98".
std::vector<real> parse_rates(const std::string& spec);

// Entry point shared by the binary and the in-process CLI tests.
// Exit codes: 0 success, 1 runtime failure, 2 usage error.
int cli_main(int argc, const char* const* argv);

}  // namespace mrmp
