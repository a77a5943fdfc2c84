#include "klrl/harness/cli.hpp"

#include "klrl/harness/config.hpp"
#include "klrl/harness/fit.hpp"
#include "klrl/harness/sweep.hpp"
#include "klrl/harness/trace_csv.hpp"
#include "klrl/theory_checks.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace klrl::harness {

namespace {

struct RunFlags {
  std::string config;
  std::string seeds;
  std::string out;
  std::optional<double> scale;
  std::optional<Index> workers;
  std::optional<Index> rounds;
  bool quiet = false;
};

void add_run_flags(CLI::App* cmd, RunFlags& f) {
  cmd->add_option("--config", f.config, "Experiment config file");
  cmd->add_option("--seed", f.seeds, "Seed list, e.g. 1,2,5-8");
  cmd->add_option("--out", f.out, "Output directory");
  cmd->add_option("--scale-bonus", f.scale, "Multiplier on the confidence radius (0 = greedy)");
  cmd->add_option("--workers", f.workers, "Parallel seed workers");
  cmd->add_option("--rounds", f.rounds, "Override T (rounds or episodes)");
  cmd->add_flag("--quiet", f.quiet, "Suppress progress output");
}

ExperimentConfig build_config(const RunFlags& f, std::optional<Mode> forced) {
  ExperimentConfig c = f.config.empty() ? default_config(forced.value_or(Mode::bandit))
                                        : load_config(f.config);
  if (forced && c.mode != *forced) {
    throw ConfigError("config '" + f.config + "' has mode " + to_string(c.mode) + ", expected " +
                      to_string(*forced));
  }
  if (!f.seeds.empty()) c.seeds = parse_seed_list(f.seeds);
  if (!f.out.empty()) c.out = f.out;
  if (f.scale) c.bonus_scale = *f.scale;
  if (f.workers) c.workers = *f.workers;
  if (f.rounds) c.horizon_t = *f.rounds;
  resolve(c);
  return c;
}

void print_sweep(std::ostream& out, const SweepResult& r) {
  for (const SeedRun& run : r.runs) {
    out << "seed " << run.seed << ": rounds " << run.trace.rounds() << ", regret "
        << (run.trace.cumulative.empty() ? 0.0 : run.trace.cumulative.back())
        << ", optimism violations " << run.trace.optimism_violations.size() << "\n";
  }
  if (r.fit) out << fit_csv_header() << "\n" << to_csv_row(*r.fit) << "\n";
}

int run_experiment(const RunFlags& f, std::optional<Mode> forced, bool scale_sweep,
                   std::ostream& out, const std::atomic<bool>* cancel) {
  const ExperimentConfig c = build_config(f, forced);
  if (c.mode == Mode::theory) throw ConfigError("sweep needs a bandit or mdp config");
  SweepOptions options;
  options.cancel = cancel;
  bool completed = true;
  if (scale_sweep) {
    const auto results = run_scale_sweep(c, options);
    for (const auto& r : results) {
      completed = completed && r.completed;
      if (!f.quiet) print_sweep(out, r);
    }
    if (!f.quiet) out << "wrote " << c.out << "/summary.csv\n";
  } else {
    const SweepResult r = run_sweep(c, options);
    completed = r.completed;
    if (!f.quiet) {
      print_sweep(out, r);
      out << "wrote " << c.out << "\n";
    }
  }
  return completed ? kExitOk : kExitInterrupted;
}

int check_theory(const RunFlags& f, std::ostream& out) {
  std::vector<std::uint64_t> seeds{7};
  if (!f.config.empty()) {
    const ExperimentConfig c = load_config(f.config);
    if (c.mode != Mode::theory) throw ConfigError("config '" + f.config + "' is not mode theory");
    seeds = c.seeds;
  }
  if (!f.seeds.empty()) seeds = parse_seed_list(f.seeds);

  std::string csv = "seed," + check_csv_header() + "\n";
  bool all_pass = true;
  for (const std::uint64_t seed : seeds) {
    for (const CheckReport& r : run_all_checks(seed)) {
      all_pass = all_pass && r.pass;
      csv += std::to_string(seed) + "," + to_csv_row(r) + "\n";
    }
  }
  if (!f.quiet) out << csv;
  if (!f.out.empty()) {
    std::filesystem::create_directories(f.out);
    write_file((std::filesystem::path(f.out) / "checks.csv").string(), csv);
  }
  return all_pass ? kExitOk : kExitCheckFailed;
}

int fit_file(const std::string& in, Index burn_in, const std::string& column, std::ostream& out) {
  TraceTable table;
  try {
    table = read_trace_csv(in);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("--in '") + in + "': " + e.what());
  }
  if (table.column(column) < 0) throw ConfigError("--in '" + in + "' has no column " + column);
  const std::vector<double> y = table.values(column);
  FitResult fit;
  try {
    fit = fit_regret_models(y, burn_in);
  } catch (const InvalidInput& e) {
    throw ConfigError(e.what());
  }
  out << fit_csv_header() << "\n" << to_csv_row(fit) << "\n";
  return kExitOk;
}

}  // namespace

int cli_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err,
                 const std::atomic<bool>* cancel) {
  CLI::App app{"KL-regularized bandit and MDP experiments", "klrl"};
  app.require_subcommand(1);

  RunFlags bandit_flags;
  RunFlags mdp_flags;
  RunFlags sweep_flags;
  RunFlags theory_flags;
  auto* bandit_cmd = app.add_subcommand("run-bandit", "Run KL-UCB over a seed list");
  auto* mdp_cmd = app.add_subcommand("run-mdp", "Run KL-LSVI-UCB over a seed list");
  auto* sweep_cmd = app.add_subcommand("sweep", "Run a config once per bonus scale");
  auto* theory_cmd = app.add_subcommand("check-theory", "Run the numerical theory checks");
  auto* fit_cmd = app.add_subcommand("fit", "Fit log and sqrt growth models to a trace CSV");
  add_run_flags(bandit_cmd, bandit_flags);
  add_run_flags(mdp_cmd, mdp_flags);
  add_run_flags(sweep_cmd, sweep_flags);
  theory_cmd->add_option("--config", theory_flags.config, "Config file with mode = theory");
  theory_cmd->add_option("--seed", theory_flags.seeds, "Seed list");
  theory_cmd->add_option("--out", theory_flags.out, "Directory for checks.csv");
  theory_cmd->add_flag("--quiet", theory_flags.quiet, "Suppress the report");

  std::string fit_in;
  Index burn_in = 20;
  std::string column = "cumulative_regret";
  fit_cmd->add_option("--in", fit_in, "Trace CSV")->required();
  fit_cmd->add_option("--burn-in", burn_in, "Rounds excluded from the fit");
  fit_cmd->add_option("--column", column, "Column holding the cumulative curve");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitConfigError;
  }

  try {
    if (*bandit_cmd) return run_experiment(bandit_flags, Mode::bandit, false, out, cancel);
    if (*mdp_cmd) return run_experiment(mdp_flags, Mode::mdp, false, out, cancel);
    if (*sweep_cmd) return run_experiment(sweep_flags, std::nullopt, true, out, cancel);
    if (*theory_cmd) return check_theory(theory_flags, out);
    if (*fit_cmd) return fit_file(fit_in, burn_in, column, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfigError;
  }
  return kExitConfigError;
}

}  // namespace klrl::harness
