#pragma once

#include <ostream>

namespace dspg::cli {

// Exit codes: 0 success, 1 user error (bad flags, inputs or config),
// 2 internal error. `out` receives command output (FASTA, TSV logs),
// `err` receives diagnostics.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace dspg::cli
