#pragma once

// KL-regularized contextual bandit environment and the optimistic KL-UCB learner.

#include "klrl/function_classes.hpp"
#include "klrl/kl_core.hpp"
#include "klrl/noise.hpp"
#include "klrl/types.hpp"

#include <atomic>
#include <cstdint>
#include <vector>

namespace klrl {

struct BanditInstance {
  Vector d0;              ///< context distribution
  RewardTable reward;     ///< R*(x, a) in [0, 1]
  PolicyTable reference;  ///< π_ref(a | x), one row per context
  double eta = 1.0;
  NoiseSpec noise;

  Index contexts() const { return reward.rows(); }
  Index actions() const { return reward.cols(); }

  /// Throws InvalidInput on malformed distributions or rewards outside [0, 1].
  void validate() const;

  double optimal_value() const { return optimal_objective(reward, eta, reference, d0); }
  PolicyTable optimal_policy() const { return gibbs_policy(reward, eta, reference); }
};

/// Observed reward R*(x,a) + ε for one pull.
double env_step(const BanditInstance& instance, Index x, Index a, Rng& rng);

/// Exact per-round quantities, one entry per round t = 1..T.
struct RegretTrace {
  std::vector<double> per_round_gap;
  std::vector<double> cumulative;
  std::vector<double> bonus_at_play;
  std::vector<double> uncertainty_at_play;
  std::vector<double> eluder_sum_curve;
  std::vector<std::uint8_t> optimism_flags;  ///< 1 when optimism failed in that round
  std::vector<Index> optimism_violations;    ///< 1-based round indices
  std::vector<double> sum_sq_bellman_error;  ///< episodic runs only

  Index rounds() const { return static_cast<Index>(per_round_gap.size()); }
  bool any_optimism_violation() const { return !optimism_violations.empty(); }
  void reserve(Index n);
};

enum class UncertaintyScope {
  confidence_set,  ///< sup over the confidence set (the algorithm)
  full_class,      ///< sup over the whole class (diagnostic)
};

struct BanditRunOptions {
  double bonus_scale = 1.0;  ///< multiplies β; 0 gives the greedy plug-in baseline
  UncertaintyScope scope = UncertaintyScope::confidence_set;
  bool keep_policies = false;
  const std::atomic<bool>* cancel = nullptr;
};

struct BanditRunResult {
  RegretTrace trace;
  PolicyTable final_policy;           ///< π_{T+1}
  std::vector<PolicyTable> policies;  ///< π_1..π_T when kept
  /// η·E_{x∼d0} E_{a∼π_t}[(R̂ + b − R*)²] for each round.
  std::vector<double> squared_error_bound;
  double beta = 0.0;
  double optimal_value = 0.0;
  bool completed = true;
};

/// Runs T rounds of KL-UCB. Policy π_{t+1} ∝ π_ref·exp(η(R̂_t + b_t)) where R̂_t
/// and b_t use the data through round t; π_1 uses the empty-data estimate.
BanditRunResult kl_ucb_run(const BanditInstance& instance, const FunctionClass& cls,
                           Index horizon, double delta, double lambda, std::uint64_t seed,
                           const BanditRunOptions& options = {});

/// Optimal objective minus J(π).
double per_round_gap(const BanditInstance& instance, const PolicyTable& pi);

/// E_{x∼d0}[Δ(x, R_opt) − Δ(x, R*)]; equals per_round_gap of the Gibbs policy of R_opt.
double gap_via_delta(const BanditInstance& instance, const RewardTable& optimistic);

/// η·E_{x∼d0} E_{a∼π_{R_opt}}[(R_opt − R*)²].
double squared_error_bound(const BanditInstance& instance, const RewardTable& optimistic);

/// Throws ConfigError unless R* lies in the class.
void require_realizable(const BanditInstance& instance, const FunctionClass& cls);

/// Throws ConfigError unless λ ≤ ½β² for the unscaled confidence radius.
void require_lambda_fits_beta(double lambda, double beta);

}  // namespace klrl
