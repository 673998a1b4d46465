#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace bpf::cli {

enum ExitCode : int { kFeasible = 0, kError = 1, kInfeasibleOrUndecided = 2 };

/// Entry point of the `bpf` tool. Messages go to out/err, never to the
/// process streams directly, so tests can drive it in-process.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Column names of the bench CSV, in order.
const std::vector<std::string>& bench_columns();

}  // namespace bpf::cli
