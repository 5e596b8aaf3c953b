#pragma once

#include <ostream>

namespace freqsamp {

/// Entry point for the `freqsamp` command line: subcommands simulate, label,
/// grad, sample, bench, gen. Returns the process exit status. Failures print
/// a one-line JSON error record to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err);

}  // namespace freqsamp
