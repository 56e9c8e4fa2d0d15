#pragma once

#include <ostream>

namespace primsim::cli {

/// Runs one subcommand. Returns 0 on success, 2 on a usage error (help text
/// is printed to err) and 1 on a runtime error.
int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace primsim::cli
