#pragma once

namespace dbrn {

/// Full command-line surface: gen-data, extract, eval, ablate, fit-tau and
/// heatmap subcommands. Returns the process exit status: 0 on success, 2 on
/// usage errors (bad flags, missing paths, malformed config), 1 on runtime
/// failures; every failure prints a one-line diagnostic to stderr.
int run_cli(int argc, const char* const* argv);

} // namespace dbrn
