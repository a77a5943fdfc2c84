#include "klrl/harness/sweep.hpp"

#include "klrl/harness/trace_csv.hpp"
#include "klrl/mdp.hpp"

#include <cstdio>
#include <exception>
#include <filesystem>
#include <mutex>
#include <thread>

namespace klrl::harness {

namespace fs = std::filesystem;

void parallel_for(Index count, Index workers, const std::function<void(Index)>& fn) {
  if (count <= 0) return;
  const Index threads = std::max<Index>(1, std::min(workers, count));
  std::atomic<Index> next{0};
  std::vector<std::exception_ptr> errors(static_cast<size_t>(count));
  auto work = [&] {
    for (Index i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
      try {
        fn(i);
      } catch (...) {
        errors[static_cast<size_t>(i)] = std::current_exception();
      }
    }
  };
  if (threads == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(threads));
    for (Index k = 0; k < threads; ++k) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

SweepResult run_sweep(const ExperimentConfig& config, const SweepOptions& options) {
  if (config.mode == Mode::theory) throw ConfigError("run_sweep: theory mode has no sweep");
  const bool episodic = config.mode == Mode::mdp;

  // Instances and classes are immutable and shared read-only across workers.
  std::optional<BanditSetup> bandit;
  std::optional<MdpSetup> mdp;
  if (episodic) {
    mdp = make_mdp(config);
  } else {
    bandit = make_bandit(config);
  }

  if (options.write_files) {
    fs::create_directories(config.out);
    write_file((fs::path(config.out) / "config.cfg").string(), canonical(config));
  }

  SweepResult result;
  result.runs.resize(config.seeds.size());
  parallel_for(static_cast<Index>(config.seeds.size()), config.workers, [&](Index i) {
    SeedRun& run = result.runs[static_cast<size_t>(i)];
    run.seed = config.seeds[static_cast<size_t>(i)];
    if (episodic) {
      MdpRunOptions o;
      o.bonus_scale = config.bonus_scale;
      o.bonus_cardinality = config.bonus_cardinality;
      o.scope = config.scope;
      o.cancel = options.cancel;
      MdpRunResult r = kl_lsvi_ucb_run(mdp->instance, mdp->classes, config.horizon_t, config.delta,
                                       config.lambda, run.seed, o);
      run.trace = std::move(r.trace);
      run.completed = r.completed;
    } else {
      BanditRunOptions o;
      o.bonus_scale = config.bonus_scale;
      o.scope = config.scope;
      o.cancel = options.cancel;
      BanditRunResult r = kl_ucb_run(bandit->instance, bandit->cls, config.horizon_t, config.delta,
                                     config.lambda, run.seed, o);
      run.trace = std::move(r.trace);
      run.completed = r.completed;
    }
    if (options.write_files) {
      const std::string name = "seed_" + std::to_string(run.seed) + ".csv";
      write_file((fs::path(config.out) / name).string(), trace_to_csv(run.trace, episodic));
    }
  });

  std::vector<RegretTrace> traces;
  traces.reserve(result.runs.size());
  for (const SeedRun& run : result.runs) {
    result.completed = result.completed && run.completed;
    traces.push_back(run.trace);
  }
  const std::string aggregate = aggregate_to_csv(traces, episodic);
  result.mean_cumulative = parse_trace_csv(aggregate).values("cumulative_regret");
  if (static_cast<Index>(result.mean_cumulative.size()) > config.burn_in + 10) {
    result.fit = fit_regret_models(result.mean_cumulative, config.burn_in);
  }
  if (options.write_files) {
    write_file((fs::path(config.out) / "aggregate.csv").string(), aggregate);
    if (result.fit) {
      write_file((fs::path(config.out) / "fit.csv").string(),
                 fit_csv_header() + "\n" + to_csv_row(*result.fit) + "\n");
    }
  }
  return result;
}

std::string summary_csv_header() {
  return "bonus_scale,seeds,rounds,final_mean_regret," + fit_csv_header();
}

std::vector<SweepResult> run_scale_sweep(const ExperimentConfig& config,
                                         const SweepOptions& options) {
  const std::vector<double> scales =
      config.sweep_scales.empty() ? std::vector<double>{config.bonus_scale} : config.sweep_scales;
  std::vector<SweepResult> results;
  std::string summary = summary_csv_header() + "\n";
  for (size_t k = 0; k < scales.size(); ++k) {
    ExperimentConfig sub = config;
    sub.bonus_scale = scales[k];
    sub.sweep_scales.clear();
    sub.out = (fs::path(config.out) / ("scale_" + std::to_string(k))).string();
    results.push_back(run_sweep(sub, options));
    const SweepResult& r = results.back();
    char buf[128];
    std::snprintf(buf, sizeof buf, "%.17g,%zu,%zu,%.17g,", scales[k], r.runs.size(),
                  r.mean_cumulative.size(),
                  r.mean_cumulative.empty() ? 0.0 : r.mean_cumulative.back());
    summary += buf;
    summary += r.fit ? to_csv_row(*r.fit) : std::string("0,,,,,,,inconclusive");
    summary += "\n";
    if (options.cancel != nullptr && options.cancel->load()) break;
  }
  if (options.write_files) {
    fs::create_directories(config.out);
    write_file((fs::path(config.out) / "summary.csv").string(), summary);
  }
  return results;
}

}  // namespace klrl::harness
