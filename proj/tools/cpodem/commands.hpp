#pragma once

#include <ostream>

namespace cpodem::cli {

/// Entry point behind the `cpodem` executable. Returns 0 on success, 1 on a
/// usage error (message and usage on `err`), 2 on a runtime failure.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace cpodem::cli
