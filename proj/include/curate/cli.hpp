#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace curate::cli {

/// Counts reported on standard error after a run.
struct RunSummary {
    std::size_t in = 0;
    std::size_t kept = 0;
    /// Discards per reason id.
    std::map<std::string, std::size_t> reasons;
    /// Extra per-category counts (labels, tiers).
    std::map<std::string, std::size_t> counts;
    std::size_t data_errors = 0;
    std::optional<double> wall_seconds;
};

/// "in=N kept=K discarded=D", then "reason <id>=<n>" and "count <name>=<n>"
/// lines in key order, "errors=<n>" when records were rejected, and the wall
/// time only when it was measured.
std::string emit_summary(const RunSummary& summary);

/// Parses args (without the program name) and runs one subcommand.
/// Returns 0 on success, 1 on data errors, 2 on usage or configuration errors.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace curate::cli
