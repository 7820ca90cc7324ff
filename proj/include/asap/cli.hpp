#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace asap::cli {

enum exit_code : int { ok = 0, internal_error = 1, config_failure = 2 };

/// Entry point behind the `asap` binary. `args` excludes the program name.
///
///   run --scenario <name|path> [--seed N] [--out PATH] [--events-out PATH]
///       [--mode virtual|realtime] [--set key=value ...] [--<key> <value> ...]
///
/// Settings are layered: built-in defaults, then the scenario, then the file
/// named by ASAP_CONFIG, then command-line flags.
int run_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace asap::cli
