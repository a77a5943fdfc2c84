#pragma once

// Seeded random instance generators and the named preset instances used by
// the harness and the acceptance suite.

#include "klrl/bandit.hpp"
#include "klrl/function_classes.hpp"
#include "klrl/mdp.hpp"
#include "klrl/noise.hpp"

#include <string>
#include <vector>

namespace klrl {

/// Uniform draw from the simplex of dimension n (flat Dirichlet).
Vector random_distribution(Rng& rng, Index n);

/// Uniform draw from the simplex with every weight at least `floor`/n.
Vector random_full_support_distribution(Rng& rng, Index n, double floor = 0.05);

/// Random instance: uniform R* in [0,1], full-support d0 and π_ref, η uniform in [eta_min, eta_max].
BanditInstance random_bandit(Rng& rng, Index contexts, Index actions, double eta_min = 0.5,
                             double eta_max = 8.0, NoiseSpec noise = {});

/// Random instance with Dirichlet transitions and rewards rescaled so that Q* ≤ 1.
MdpInstance random_mdp(Rng& rng, Index states, Index actions, Index horizon, double eta,
                       NoiseSpec noise = NoiseSpec::none());

/// Random finite class of `size` tables containing `truth` at index `truth_index`.
FiniteFunctionClass random_finite_class(Rng& rng, const RewardTable& truth, Index size,
                                        Index truth_index);

// --- presets ------------------------------------------------------------------

/// 1 context, 2 actions, R* = (0.2, 0.8), uniform π_ref, η = 1, Gaussian σ = 0.5.
BanditInstance two_arm_bandit();

/// Eight two-arm tables (u, 1 − u); R* = (0.2, 0.8) is member 2.
FiniteFunctionClass two_arm_class();

/// Rare-arm instance: π_ref = (1 − e⁻⁸, e⁻⁸), R* = (0.5, 1.0), η = 16, Gaussian σ = 0.5.
BanditInstance deceptive_bandit();

/// Class whose first member (0.5, 0.0) agrees with R* on the common arm and
/// undervalues the rare one, so the plug-in learner rarely corrects it.
FiniteFunctionClass deceptive_class();

/// The 5-state, 3-action, H = 3 random MDP used for the episodic scaling runs.
MdpInstance scaling_mdp();

/// One one-hot linear class per step with B = sqrt(S·A).
std::vector<FunctionClass> one_hot_classes(const MdpInstance& instance);

/// Preset names accepted by the harness.
std::vector<std::string> bandit_preset_names();
std::vector<std::string> mdp_preset_names();

}  // namespace klrl
