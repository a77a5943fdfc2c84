#pragma once

// Trace CSV persistence. Columns:
//   t,per_round_gap,cumulative_regret,bonus_at_play,uncertainty_at_play,eluder_sum,optimism_violated
// plus sum_sq_bellman_error for episodic runs. Reals use %.17g so that files
// round-trip exactly; lines end in LF.

#include "klrl/bandit.hpp"

#include <string>
#include <vector>

namespace klrl::harness {

/// Column-major numeric table read from or written to a trace CSV.
struct TraceTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  Index column(const std::string& name) const;  ///< -1 when absent
  std::vector<double> values(const std::string& name) const;
};

std::string trace_header(bool episodic);

/// One row per round.
std::string trace_to_csv(const RegretTrace& trace, bool episodic);

/// Row-wise mean over the common prefix of the traces.
std::string aggregate_to_csv(const std::vector<RegretTrace>& traces, bool episodic);

/// Row-wise mean of already-parsed tables over their common prefix, with the
/// same formatting as aggregate_to_csv.
std::string aggregate_tables_to_csv(const std::vector<TraceTable>& tables);

TraceTable parse_trace_csv(const std::string& text);
TraceTable read_trace_csv(const std::string& path);

/// Writes bytes verbatim (binary mode). Throws std::runtime_error on failure.
void write_file(const std::string& path, const std::string& contents);
std::string read_file(const std::string& path);

}  // namespace klrl::harness
