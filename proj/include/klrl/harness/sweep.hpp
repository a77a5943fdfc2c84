#pragma once

// Seeded experiment sweeps: one independent run per seed on a bounded worker
// pool, followed by per-seed and mean-over-seeds CSV output.

#include "klrl/bandit.hpp"
#include "klrl/harness/config.hpp"
#include "klrl/harness/fit.hpp"

#include <atomic>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace klrl::harness {

struct SeedRun {
  std::uint64_t seed = 0;
  RegretTrace trace;
  bool completed = true;
};

struct SweepOptions {
  bool write_files = true;
  const std::atomic<bool>* cancel = nullptr;
};

struct SweepResult {
  std::vector<SeedRun> runs;  ///< in seed-list order
  std::vector<double> mean_cumulative;
  std::optional<FitResult> fit;  ///< absent when the curve is too short
  bool completed = true;
};

/// Runs every seed of `config` at config.bonus_scale. With write_files, writes
/// config.cfg, seed_<s>.csv, aggregate.csv and (when fittable) fit.csv into
/// config.out. Interrupted runs still flush their partial traces.
SweepResult run_sweep(const ExperimentConfig& config, const SweepOptions& options = {});

/// Runs run_sweep once per entry of config.sweep_scales (or config.bonus_scale
/// when empty) into <out>/scale_<k>/ and writes <out>/summary.csv.
std::vector<SweepResult> run_scale_sweep(const ExperimentConfig& config,
                                         const SweepOptions& options = {});

std::string summary_csv_header();

/// Runs fn(i) for i in [0, count) on `workers` threads; rethrows the first failure.
void parallel_for(Index count, Index workers, const std::function<void(Index)>& fn);

}  // namespace klrl::harness
