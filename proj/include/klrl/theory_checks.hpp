#pragma once

// Numerical checks of the inequalities and identities behind the regret
// analysis. Every check is a pure function of its arguments and seed.

#include "klrl/bandit.hpp"
#include "klrl/function_classes.hpp"
#include "klrl/mdp.hpp"
#include "klrl/noise.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace klrl {

struct CheckReport {
  std::string name;
  Index trials = 0;
  double max_violation = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

/// pass ⇔ max_violation ≤ tolerance.
CheckReport make_report(std::string name, Index trials, double max_violation, double tolerance);

std::string check_csv_header();
std::string to_csv_row(const CheckReport& report);

/// Max relative error ‖g − g_fd‖∞ / max(‖g‖∞, ‖g_fd‖∞, floor) of delta_gradient
/// against central differences of delta_value, over random single-context
/// instances with 2–8 actions and η ∈ [0.5, 8].
CheckReport gradient_check(Index trials, std::uint64_t seed, double step = 1e-6,
                           double tolerance = 1e-5);

/// Max |Σ_a ∂Δ/∂R(a)| over the same instance stream (tolerance 1e-12).
CheckReport gradient_sum_check(Index trials, std::uint64_t seed, double tolerance = 1e-12);

/// Relative denominator floor used by gradient_check.
inline constexpr double kGradientFloor = 1e-3;

/// U(λ) = Σ_a λ·δ(a)²·π_{R*+λδ}(a), the quantity whose monotonicity closes the
/// single-round bound.
double u_lambda(const Vector& delta, const Vector& reward_star, double eta, const Vector& reference,
                double lambda);

/// Largest decrease U(λ_k) − U(λ_{k+1}) and excess U(λ) − U(1) over a uniform
/// grid on [0, 1], over random instances with δ ≥ 0.
CheckReport u_lambda_check(Index trials, Index grid_size, std::uint64_t seed,
                           double tolerance = 1e-10);

struct DiscreteVariable {
  Vector values;
  Vector probabilities;
};

/// E[X³] − E[X²]·E[X].
double third_moment_gap(const DiscreteVariable& x);

/// Largest −(E[X³] − E[X²]E[X]). Throws PreconditionError on negative support.
CheckReport third_moment_check(const std::vector<DiscreteVariable>& variables,
                               double tolerance = 1e-12);

/// 8·log(N·T/δ).
double generalization_bound(double cardinality, Index horizon, double delta);

/// Runs seeded streams (x_t, a_t) uniform over cells with y = f*(x,a) + ε and
/// reports the fraction of runs where Σ_{i≤t}(f̂_t − f*)²(x_i,a_i) exceeds the
/// bound for some t. Tolerance is δ + 2·sqrt(δ(1−δ)/runs).
CheckReport generalization_check(const FiniteFunctionClass& cls, Index truth, const NoiseSpec& noise,
                                 Index runs, Index horizon, double delta, std::uint64_t seed);

/// Uniform mixture of per-round policies. Its objective is the average of the
/// component objectives.
struct MixtureResult {
  double mixture_objective = 0.0;
  double mixture_gap = 0.0;
  double average_gap = 0.0;  ///< (1/T)·Σ_t (J* − J(π_t)), summed independently
  Index components = 0;
};

MixtureResult online_to_batch(const std::vector<PolicyTable>& policies,
                              const BanditInstance& instance);
MixtureResult online_to_batch(const std::vector<MdpPolicy>& policies, const MdpInstance& instance);

/// Neumaier-compensated sum.
double compensated_sum(const std::vector<double>& values);

/// Every check at its default size, as run by `check-theory`.
std::vector<CheckReport> run_all_checks(std::uint64_t seed);

}  // namespace klrl
