#pragma once

namespace causalkit {

// Full command-line surface (discover / evaluate / fairness / optimize /
// gen-fixture). Returns the process exit code: 0 success, 1 configuration
// error, 2 oracle error, 3 I/O error. Kept in the library so tests can
// drive it in-process.
int run_cli(int argc, const char* const* argv);

}  // namespace causalkit
