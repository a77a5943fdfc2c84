#pragma once

// Finite-horizon tabular KL-regularized MDPs: exact soft dynamic programming,
// policy evaluation with KL penalties, and the optimistic KL-LSVI-UCB learner.
//
// Steps are 0-based in code: h = 0..H-1, with V_H ≡ 0.

#include "klrl/bandit.hpp"
#include "klrl/function_classes.hpp"
#include "klrl/kl_core.hpp"
#include "klrl/noise.hpp"
#include "klrl/types.hpp"

#include <atomic>
#include <cstdint>
#include <vector>

namespace klrl {

struct MdpInstance {
  Index states = 0;
  Index actions = 0;
  Index horizon = 0;
  /// Per step: (S·A) × S row-stochastic matrix, row s·A + a.
  std::vector<Matrix> transitions;
  /// Per step: S × A reward table.
  std::vector<RewardTable> rewards;
  Vector d0;
  /// Per step: S × A reference policy.
  std::vector<PolicyTable> reference;
  double eta = 1.0;
  /// Observation noise on per-step rewards; none by default.
  NoiseSpec noise = NoiseSpec::none();
  /// Factor the generator applied to raw rewards (1 when untouched).
  double reward_scale = 1.0;

  Index row(Index s, Index a) const { return s * actions + a; }
  void validate() const;
};

/// One conditional action distribution table (S × A) per step.
using MdpPolicy = std::vector<PolicyTable>;

struct ValueFunctions {
  std::vector<RewardTable> q;  ///< H tables
  std::vector<Vector> v;       ///< H + 1 vectors, v[H] ≡ 0
};

struct OptimalSolution {
  ValueFunctions values;
  MdpPolicy policy;
  double objective = 0.0;
};

struct PolicyEvaluation {
  double objective = 0.0;
  ValueFunctions values;
  bool support_violation = false;
};

struct Step {
  Index state = 0;
  Index action = 0;
  double reward = 0.0;
  Index next_state = 0;
};

using EpisodeTrace = std::vector<Step>;

/// Soft value of every state: (1/η)·log E_{a∼ref(·|s)} exp(η·Q(s,a)).
Vector soft_values(const RewardTable& q, double eta, const PolicyTable& reference);

/// r_h + P_h·v_next.
RewardTable bellman_backup(const MdpInstance& instance, Index h, const Vector& v_next);

/// r_h(s,a) + Σ_{s'} P_h(s'|s,a)·soft_value(f_next, η, π_ref,h+1, s'). At the last
/// step f_next must be identically zero (V_H ≡ 0).
RewardTable bellman_apply(const MdpInstance& instance, Index h, const RewardTable& f_next);

/// Backward soft dynamic programming. Throws InvalidInput when Q* leaves [0, 1]
/// by more than `q_tolerance`.
OptimalSolution optimal_backward_induction(const MdpInstance& instance, double q_tolerance = 1e-9);

/// Exact backward evaluation of J(π) with per-step KL penalties. A support
/// violation at a reachable state sets `support_violation` and J = −infinity.
PolicyEvaluation policy_value(const MdpInstance& instance, const MdpPolicy& pi);

/// Per-step state distribution under d0 × π.
std::vector<Vector> state_occupancy(const MdpInstance& instance, const MdpPolicy& pi);

/// Samples one episode.
EpisodeTrace rollout(const MdpInstance& instance, const MdpPolicy& pi, Rng& rng);

/// Multiplies rewards by the largest c ≤ 1 with max Q* ≤ 1 and records c.
void rescale_rewards_to_unit_q(MdpInstance& instance);

/// Throws ConfigError unless Q*_h ∈ F_h for every step.
void require_realizable(const MdpInstance& instance, const std::vector<FunctionClass>& classes,
                        const ValueFunctions& optimal);

/// Throws ConfigError unless 𝒯_h f ∈ F_h for all f ∈ F_{h+1} (brute force for
/// finite classes; full-rank features for linear classes).
void require_complete(const MdpInstance& instance, const std::vector<FunctionClass>& classes);

struct MdpRunOptions {
  double bonus_scale = 1.0;
  double bonus_cardinality = 1.0;  ///< N_B entering the confidence radius
  UncertaintyScope scope = UncertaintyScope::confidence_set;
  bool keep_policies = false;
  bool keep_estimates = false;  ///< log Q̂, V̂ and rollouts for diagnostics
  bool check_completeness = true;
  const std::atomic<bool>* cancel = nullptr;
};

struct EpisodeEstimates {
  std::vector<RewardTable> f_hat;
  std::vector<RewardTable> bonus;
  std::vector<RewardTable> q_hat;
  std::vector<Vector> v_hat;  ///< H + 1 vectors, v_hat[H] ≡ 0
};

struct MdpRunResult {
  RegretTrace trace;
  std::vector<MdpPolicy> policies;
  std::vector<EpisodeEstimates> estimates;
  std::vector<EpisodeTrace> episodes;
  /// Exact E^{π^t}[Σ_h e_h(s_h,a_h)²] per episode.
  std::vector<double> expected_sq_bellman_error;
  std::vector<double> beta;  ///< per step, after scaling
  double optimal_value = 0.0;
  bool completed = true;
};

MdpRunResult kl_lsvi_ucb_run(const MdpInstance& instance, const std::vector<FunctionClass>& classes,
                             Index episodes, double delta, double lambda, std::uint64_t seed,
                             const MdpRunOptions& options = {});

/// e_h = Q̂_h − 𝒯_h V̂_{h+1}, one table per step, recomputed through bellman_apply.
std::vector<RewardTable> bellman_errors(const MdpInstance& instance,
                                        const EpisodeEstimates& estimates);

/// Σ_h e_h(s_h, a_h)² along each logged rollout, recomputed from the logged estimates.
std::vector<double> bellman_error_diagnostics(const MdpInstance& instance,
                                              const MdpRunResult& run);

}  // namespace klrl
