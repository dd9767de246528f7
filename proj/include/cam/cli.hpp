#pragma once

#include <ostream>

namespace cam {

/// Entry point of the `cam` tool. Returns 0 on success, 1 on data or
/// estimation errors and 2 on usage errors.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace cam
