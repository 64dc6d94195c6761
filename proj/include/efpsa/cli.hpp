#pragma once

#include <iosfwd>

namespace efpsa::cli {

/// Entry point shared by the executable and the tests. Returns the exit code:
/// 0 success, 2 validation error, 3 numerical failure.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace efpsa::cli
