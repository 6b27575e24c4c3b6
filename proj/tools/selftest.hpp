#pragma once

#include <ostream>

namespace ivope::tools {

/// Fast invariant checks; prints one line per check and returns the number of failures.
int run_selftest(std::ostream& out);

}  // namespace ivope::tools
