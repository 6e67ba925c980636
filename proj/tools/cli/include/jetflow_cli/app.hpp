#pragma once

#include <iosfwd>

namespace jetflow::cli {

/// Entry point of the jetflow tool; returns the process exit code. Exit 0
/// means every requested check passed or the solver converged.
int run_app(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace jetflow::cli
