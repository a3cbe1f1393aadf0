#pragma once

#include <iosfwd>

namespace rgrst::cli {

/// Runs one subcommand. Returns 0 on success, 2 on a configuration error
/// (bad flags, unusable paths) and 3 when the work itself fails.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace rgrst::cli
