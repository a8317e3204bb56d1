#pragma once

#include <iosfwd>

#include "advkit/error.hpp"

namespace advkit {

/// 0 success, 2 config error, 3 data/io/dimension error, 4 invariant or
/// contract violation.
int exit_code_for(const Error& error);

/// Entry point of the advkit tool. Subcommands gen-data, train, attack, eval
/// and sweep each take --config plus --output-dir/--seed/--force overrides.
/// Failures print one "<category>: <message>" line to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace advkit
