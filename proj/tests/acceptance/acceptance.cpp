// Acceptance suite: one PASS/FAIL line per criterion. Tolerances and sizes are
// pinned here and never tuned. `--criterion N` runs a single criterion.

#include "../oracles.hpp"
#include "klrl/bandit.hpp"
#include "klrl/harness/config.hpp"
#include "klrl/harness/fit.hpp"
#include "klrl/harness/sweep.hpp"
#include "klrl/harness/trace_csv.hpp"
#include "klrl/instances.hpp"
#include "klrl/mdp.hpp"
#include "klrl/theory_checks.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <unistd.h>
#include <vector>

using namespace klrl;
using namespace klrl::harness;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string title;
  double time_limit_s;  ///< 0 when the criterion has no runtime bound
  std::function<Outcome()> run;
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

std::vector<double> mean_curve(const std::vector<RegretTrace>& traces) {
  std::vector<double> mean(traces.front().cumulative.size(), 0.0);
  for (const RegretTrace& tr : traces) {
    for (size_t t = 0; t < mean.size(); ++t) mean[t] += tr.cumulative[t];
  }
  for (double& m : mean) m /= static_cast<double>(traces.size());
  return mean;
}

/// Regret(T)/Regret(100) on a 1-based cumulative curve.
double ratio_to_100(const std::vector<double>& cumulative) { return cumulative.back() / cumulative[99]; }

// --- shared runs (criteria 6, 7, 9 and 10) ---------------------------------------------------

constexpr Index kSeeds = 20;

struct BanditRuns {
  BanditInstance instance;
  std::vector<BanditRunResult> runs;
};

BanditRuns bandit_runs(const BanditInstance& inst, const FiniteFunctionClass& cls, Index horizon,
                       double scale) {
  BanditRuns out{inst, {}};
  BanditRunOptions opts;
  opts.bonus_scale = scale;
  opts.keep_policies = true;
  for (Index s = 1; s <= kSeeds; ++s) {
    out.runs.push_back(kl_ucb_run(inst, cls, horizon, 0.1, 1.0, static_cast<std::uint64_t>(s), opts));
  }
  return out;
}

const BanditRuns& two_arm_runs() {
  static const BanditRuns runs = bandit_runs(two_arm_bandit(), two_arm_class(), 10000, 1.0);
  return runs;
}

const BanditRuns& deceptive_runs(double scale) {
  static std::optional<BanditRuns> ucb;
  static std::optional<BanditRuns> greedy;
  auto& slot = scale > 0.0 ? ucb : greedy;
  if (!slot) slot = bandit_runs(deceptive_bandit(), deceptive_class(), 10000, scale);
  return *slot;
}

struct MdpRuns {
  MdpInstance instance;
  std::vector<MdpRunResult> runs;
};

const MdpRuns& scaling_runs() {
  static const MdpRuns runs = [] {
    MdpRuns out{scaling_mdp(), {}};
    const auto classes = one_hot_classes(out.instance);
    MdpRunOptions opts;
    opts.keep_policies = true;
    for (Index s = 1; s <= kSeeds; ++s) {
      out.runs.push_back(kl_lsvi_ucb_run(out.instance, classes, 5000, 0.1, 1.0, static_cast<std::uint64_t>(s), opts));
    }
    return out;
  }();
  return runs;
}

std::vector<RegretTrace> traces_of(const auto& runs) {
  std::vector<RegretTrace> out;
  for (const auto& r : runs) out.push_back(r.trace);
  return out;
}

// --- criteria ----------------------------------------------------------------------------------

Outcome gibbs_optimality() {
  Rng rng(1001);
  double worst_shortfall = 0.0;
  double worst_identity = 0.0;
  for (Index k = 0; k < 50; ++k) {
    const BanditInstance inst = random_bandit(rng, 1 + k % 4, 2 + k % 5);
    const PolicyTable star = inst.optimal_policy();
    const double j_star = objective(star, inst.reward, inst.eta, inst.reference, inst.d0);
    worst_identity = std::max(worst_identity, std::abs(j_star - inst.optimal_value()));
    for (int p = 0; p < 1000; ++p) {
      PolicyTable pi(inst.contexts(), inst.actions());
      for (Index x = 0; x < inst.contexts(); ++x) pi.row(x) = random_distribution(rng, inst.actions()).transpose();
      const double j = objective(pi, inst.reward, inst.eta, inst.reference, inst.d0);
      worst_shortfall = std::max(worst_shortfall, j - j_star);
    }
  }
  return {worst_shortfall <= 1e-9 && worst_identity <= 1e-9,
          fmt("50 instances x 1000 policies: max J(pi) - J(gibbs) = %.3g, max |J(gibbs) - optimum| = %.3g (tol 1e-9)",
              worst_shortfall, worst_identity)};
}

Outcome gradient_fidelity() {
  const CheckReport g = gradient_check(100, 2002);
  const CheckReport s = gradient_sum_check(100, 2002);
  return {g.max_violation < 1e-5 && s.max_violation <= 1e-12,
          fmt("100 instances: max relative error %.3g (< 1e-5), max |component sum| %.3g (<= 1e-12)",
              g.max_violation, s.max_violation)};
}

Outcome u_lambda_monotone() {
  const CheckReport r = u_lambda_check(200, 101, 3003, 1e-10);
  return {r.max_violation <= 1e-10,
          fmt("200 optimistic instances, 101-point grid: max violation %.3g (tol 1e-10)", r.max_violation)};
}

Outcome generalization() {
  Rng rng(4004);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const RewardTable truth = RewardTable::NullaryExpr(3, 3, [&] { return unit(rng); });
  const FiniteFunctionClass cls = random_finite_class(rng, truth, 10, 3);
  const CheckReport r = generalization_check(cls, 3, NoiseSpec::gaussian(0.5), 400, 100, 0.05, 4004);
  return {r.pass, fmt("400 streams, N = 10, T = 100, delta = 0.05: violation frequency %.4f <= %.4f",
                      r.max_violation, r.tolerance)};
}

Outcome optimism_frequency() {
  Rng rng(5005);
  const BanditInstance inst = random_bandit(rng, 2, 3, 0.5, 8.0, NoiseSpec::gaussian(0.5));
  const FiniteFunctionClass cls = random_finite_class(rng, inst.reward, 8, 3);
  const Index runs = 200;
  Index violated = 0;
  for (Index s = 1; s <= runs; ++s) {
    const auto run = kl_ucb_run(inst, cls, 1000, 0.1, 1.0, static_cast<std::uint64_t>(s));
    if (run.trace.any_optimism_violation()) ++violated;
  }
  const double freq = static_cast<double>(violated) / static_cast<double>(runs);
  const double bound = 0.1 + 2.0 * std::sqrt(0.1 * 0.9 / static_cast<double>(runs));
  return {freq <= bound, fmt("200 runs, T = 1000, delta = 0.1: %lld runs with a violation, fraction %.4f <= %.4f",
                             static_cast<long long>(violated), freq, bound)};
}

Outcome bandit_log_scaling() {
  const std::vector<double> mean = mean_curve(traces_of(two_arm_runs().runs));
  const FitResult fit = fit_regret_models(mean);
  const double ratio = ratio_to_100(mean);
  return {fit.preferred == GrowthModel::log && ratio >= 1.0 && ratio <= 5.0,
          fmt("two_arm, 20 seeds, T = 1e4: preferred %s (log rss %.4g, sqrt rss %.4g), "
              "Regret(1e4) = %.4g, ratio to Regret(100) %.3f (band [1, 5])",
              to_string(fit.preferred).c_str(), fit.log_rss, fit.sqrt_rss, mean.back(), ratio)};
}

Outcome greedy_separation() {
  Index ucb_log = 0;
  Index greedy_non_log = 0;
  for (const auto& run : deceptive_runs(1.0).runs) {
    if (fit_regret_models(run.trace.cumulative).preferred == GrowthModel::log) ++ucb_log;
  }
  for (const auto& run : deceptive_runs(0.0).runs) {
    const FitResult fit = fit_regret_models(run.trace.cumulative);
    if (fit.preferred != GrowthModel::log || ratio_to_100(run.trace.cumulative) > 8.0) ++greedy_non_log;
  }
  const double ucb_final = mean_curve(traces_of(deceptive_runs(1.0).runs)).back();
  const double greedy_final = mean_curve(traces_of(deceptive_runs(0.0).runs)).back();
  return {ucb_log >= 15 && greedy_non_log >= 15,
          fmt("deceptive, T = 1e4: KL-UCB log-preferred on %lld/20 seeds (mean regret %.4g); "
              "greedy non-log on %lld/20 seeds (mean regret %.4g); need >= 15 each",
              static_cast<long long>(ucb_log), ucb_final, static_cast<long long>(greedy_non_log), greedy_final)};
}

Outcome mdp_soft_dp() {
  Rng rng(8008);
  std::uniform_real_distribution<double> eta_dist(0.5, 8.0);
  double worst = 0.0;
  double worst_bandit = 0.0;
  Index h1 = 0;
  for (Index k = 0; k < 100; ++k) {
    const MdpInstance m = random_mdp(rng, 2 + k % 4, 2 + k % 2, 1 + k % 3, eta_dist(rng));
    const OptimalSolution opt = optimal_backward_induction(m);
    worst = std::max(worst, std::abs(opt.objective - static_cast<double>(oracle::soft_optimal_objective(m))));
    for (Index s = 0; s < m.states; ++s) {
      worst = std::max(worst, std::abs(opt.values.v[0](s) - static_cast<double>(oracle::soft_optimal_value(m, 0, s))));
    }
    worst = std::max(worst, std::abs(policy_value(m, opt.policy).objective -
                                     static_cast<double>(oracle::path_enumeration_value(m, opt.policy))));
    if (m.horizon == 1) {
      ++h1;
      worst_bandit = std::max(worst_bandit,
                              std::abs(opt.objective - optimal_objective(m.rewards[0], m.eta, m.reference[0], m.d0)));
      const PolicyTable bandit_policy = gibbs_policy(m.rewards[0], m.eta, m.reference[0]);
      worst_bandit = std::max(worst_bandit, (bandit_policy - opt.policy[0]).cwiseAbs().maxCoeff());
    }
  }
  return {worst <= 1e-10 && worst_bandit <= 1e-10,
          fmt("100 instances: max deviation from the independent oracle %.3g; %lld H = 1 instances vs "
              "the bandit module %.3g (tol 1e-10)",
              worst, static_cast<long long>(h1), worst_bandit)};
}

Outcome mdp_log_scaling() {
  const MdpRuns& r = scaling_runs();
  const std::vector<double> mean = mean_curve(traces_of(r.runs));
  const FitResult fit = fit_regret_models(mean);
  const double ratio = ratio_to_100(mean);
  Index violated = 0;
  for (const auto& run : r.runs) violated += run.trace.any_optimism_violation() ? 1 : 0;
  return {fit.preferred == GrowthModel::log && ratio <= 6.0,
          fmt("scaling MDP, 20 seeds, T = 5000: preferred %s (log rss %.4g, sqrt rss %.4g), "
              "Regret(5000) = %.4g, ratio to Regret(100) %.3f (<= 6); runs with optimism violations %lld/20",
              to_string(fit.preferred).c_str(), fit.log_rss, fit.sqrt_rss, mean.back(), ratio,
              static_cast<long long>(violated))};
}

Outcome online_to_batch_identity() {
  double worst = 0.0;
  Index checked = 0;
  auto record = [&](const MixtureResult& mix, const RegretTrace& trace) {
    const double trace_mean = compensated_sum(trace.per_round_gap) / static_cast<double>(trace.rounds());
    worst = std::max({worst, std::abs(mix.mixture_gap - mix.average_gap), std::abs(mix.mixture_gap - trace_mean)});
    ++checked;
  };
  for (const BanditRuns* set : {&two_arm_runs(), &deceptive_runs(1.0), &deceptive_runs(0.0)}) {
    for (const auto& run : set->runs) {
      if (run.completed) record(online_to_batch(run.policies, set->instance), run.trace);
    }
  }
  for (const auto& run : scaling_runs().runs) {
    if (run.completed) record(online_to_batch(run.policies, scaling_runs().instance), run.trace);
  }
  return {worst <= 1e-12, fmt("%lld completed runs: max |mixture gap - average gap| %.3g (tol 1e-12)",
                              static_cast<long long>(checked), worst)};
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / ("klrl_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  Index files = 0;
  Index mismatched = 0;
  auto compare = [&](ExperimentConfig c, const std::string& tag) {
    c.out = (root / (tag + "_a")).string();
    c.workers = 1;
    run_sweep(c);
    ExperimentConfig again = c;
    again.out = (root / (tag + "_b")).string();
    again.workers = 2;
    run_sweep(again);
    for (const auto& entry : fs::directory_iterator(c.out)) {
      const std::string name = entry.path().filename().string();
      if (name == "config.cfg") continue;  // records the out path, which differs by design
      ++files;
      if (read_file(entry.path().string()) != read_file((fs::path(again.out) / name).string())) ++mismatched;
    }
  };
  ExperimentConfig bandit = default_config(Mode::bandit);
  bandit.horizon_t = 2000;
  bandit.seeds = {1, 2, 3};
  compare(bandit, "bandit");
  ExperimentConfig mdp = default_config(Mode::mdp);
  mdp.horizon_t = 300;
  mdp.seeds = {1, 2};
  compare(mdp, "mdp");
  fs::remove_all(root);
  return {files > 0 && mismatched == 0,
          fmt("%lld CSV files from repeated bandit and MDP sweeps (1 vs 2 workers): %lld differ",
              static_cast<long long>(files), static_cast<long long>(mismatched))};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  int only = 0;
  app.add_option("--criterion", only, "Run a single criterion (1-11)")->check(CLI::Range(1, 11));
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> criteria{
      {1, "Gibbs optimality", 10, gibbs_optimality},
      {2, "gradient fidelity", 5, gradient_fidelity},
      {3, "U(lambda) monotonicity", 5, u_lambda_monotone},
      {4, "generalization bound", 30, generalization},
      {5, "optimism frequency", 120, optimism_frequency},
      {6, "bandit log-scaling", 300, bandit_log_scaling},
      {7, "greedy-baseline separation", 300, greedy_separation},
      {8, "MDP soft-DP correctness", 30, mdp_soft_dp},
      {9, "MDP log-scaling", 600, mdp_log_scaling},
      {10, "online-to-batch identity", 0, online_to_batch_identity},
      {11, "determinism", 0, determinism},
  };

  int failed = 0;
  for (const Criterion& c : criteria) {
    if (only != 0 && c.id != only) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = c.time_limit_s <= 0.0 || secs < c.time_limit_s;
    const bool pass = o.pass && in_time;
    if (!pass) ++failed;
    std::string limit = c.time_limit_s > 0.0 ? fmt(" (limit %.0fs)", c.time_limit_s) : std::string();
    std::printf("criterion %2d %s  %-28s %8.2fs%s  %s\n", c.id, pass ? "PASS" : "FAIL", c.title.c_str(), secs,
                limit.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
