#include "klrl/bandit.hpp"

#include <Eigen/QR>

#include <cmath>
#include <random>
#include <string>

namespace klrl {

void BanditInstance::validate() const {
  if (reward.rows() == 0 || reward.cols() == 0) throw InvalidInput("bandit has no cells");
  if (!reward.allFinite() || reward.minCoeff() < 0.0 || reward.maxCoeff() > 1.0) {
    throw InvalidInput("R* must take values in [0, 1]");
  }
  if (d0.size() != reward.rows()) throw InvalidInput("d0 size differs from the context count");
  require_distribution(d0, "d0");
  if (reference.rows() != reward.rows() || reference.cols() != reward.cols()) {
    throw InvalidInput("reference policy shape differs from R*");
  }
  for (Index x = 0; x < reference.rows(); ++x) {
    require_distribution(reference.row(x), "reference policy row " + std::to_string(x));
  }
  if (!(eta > 0.0) || !std::isfinite(eta)) throw InvalidInput("eta must be positive and finite");
  noise.validate();
}

void RegretTrace::reserve(Index n) {
  const auto m = static_cast<size_t>(n);
  per_round_gap.reserve(m);
  cumulative.reserve(m);
  bonus_at_play.reserve(m);
  uncertainty_at_play.reserve(m);
  eluder_sum_curve.reserve(m);
  optimism_flags.reserve(m);
}

double env_step(const BanditInstance& instance, Index x, Index a, Rng& rng) {
  if (x < 0 || x >= instance.contexts() || a < 0 || a >= instance.actions()) {
    throw std::out_of_range("env_step: cell (" + std::to_string(x) + ", " + std::to_string(a) +
                            ") out of range");
  }
  return instance.reward(x, a) + instance.noise.sample(rng);
}

double per_round_gap(const BanditInstance& instance, const PolicyTable& pi) {
  return instance.optimal_value() -
         objective(pi, instance.reward, instance.eta, instance.reference, instance.d0);
}

double gap_via_delta(const BanditInstance& instance, const RewardTable& optimistic) {
  double total = 0.0;
  for (Index x = 0; x < instance.contexts(); ++x) {
    if (instance.d0(x) <= 0.0) continue;
    const auto ref = instance.reference.row(x);
    total += instance.d0(x) *
             (delta_value(optimistic.row(x), instance.reward.row(x), instance.eta, ref) -
              delta_value(instance.reward.row(x), instance.reward.row(x), instance.eta, ref));
  }
  return total;
}

double squared_error_bound(const BanditInstance& instance, const RewardTable& optimistic) {
  double total = 0.0;
  for (Index x = 0; x < instance.contexts(); ++x) {
    if (instance.d0(x) <= 0.0) continue;
    const Vector pi =
        gibbs_distribution(optimistic.row(x), instance.eta, instance.reference.row(x));
    const Vector err = (optimistic.row(x) - instance.reward.row(x)).transpose();
    total += instance.d0(x) * pi.dot(err.cwiseAbs2());
  }
  return instance.eta * total;
}

void require_realizable(const BanditInstance& instance, const FunctionClass& cls) {
  if (const auto* finite = std::get_if<FiniteFunctionClass>(&cls)) {
    if (finite->contexts() != instance.contexts() || finite->actions() != instance.actions()) {
      throw ConfigError("function class shape differs from the instance");
    }
    if (finite->find(instance.reward) < 0) {
      throw ConfigError("R* is not a member of the finite function class");
    }
    return;
  }
  const auto& linear = std::get<LinearFunctionClass>(cls);
  if (linear.contexts() != instance.contexts() || linear.actions() != instance.actions()) {
    throw ConfigError("function class shape differs from the instance");
  }
  Vector target(instance.contexts() * instance.actions());
  for (Index x = 0; x < instance.contexts(); ++x) {
    for (Index a = 0; a < instance.actions(); ++a) target(linear.cell(x, a)) = instance.reward(x, a);
  }
  const Vector theta = linear.features().colPivHouseholderQr().solve(target);
  if ((linear.features() * theta - target).cwiseAbs().maxCoeff() > 1e-8) {
    throw ConfigError("R* is not representable by the linear features");
  }
  if (theta.norm() > linear.norm_bound() * (1.0 + 1e-9)) {
    throw ConfigError("R* needs ||theta|| = " + std::to_string(theta.norm()) +
                      " > norm bound B = " + std::to_string(linear.norm_bound()));
  }
}

void require_lambda_fits_beta(double lambda, double beta) {
  if (!(lambda > 0.0)) throw ConfigError("lambda must be positive");
  if (lambda > 0.5 * beta * beta) {
    throw ConfigError("lambda = " + std::to_string(lambda) + " exceeds beta^2/2 = " +
                      std::to_string(0.5 * beta * beta));
  }
}

namespace {

/// Reward estimate and uncertainty tables from the finite-class learner.
class FiniteEstimator {
 public:
  FiniteEstimator(const FiniteFunctionClass& cls, double lambda) : cls_(cls), learner_(cls, lambda) {}

  void observe(Index x, Index a, double r) { learner_.add_observation(x, a, r); }
  RewardTable estimate() const { return cls_.member(learner_.erm()); }
  RewardTable uncertainty(double beta, UncertaintyScope scope) const {
    const auto members = scope == UncertaintyScope::full_class
                             ? learner_.all_members()
                             : learner_.confidence_members(learner_.erm(), beta);
    return learner_.uncertainty_table(members);
  }

 private:
  const FiniteFunctionClass& cls_;
  FiniteLearner learner_;
};

class LinearEstimator {
 public:
  LinearEstimator(const LinearFunctionClass& cls, double lambda) : cls_(cls), learner_(cls, lambda) {}

  void observe(Index x, Index a, double r) { learner_.add_observation(x, a, r); }
  RewardTable estimate() const { return cls_.table(learner_.theta()); }
  RewardTable uncertainty(double, UncertaintyScope) const { return learner_.uncertainty_table(); }

 private:
  const LinearFunctionClass& cls_;
  LinearLearner learner_;
};

template <typename Estimator>
BanditRunResult run_with(const BanditInstance& instance, Estimator estimator, Index horizon,
                         double beta, double lambda, std::uint64_t seed,
                         const BanditRunOptions& options) {
  BanditRunResult result;
  result.beta = beta;
  result.optimal_value = instance.optimal_value();
  result.trace.reserve(horizon);
  result.squared_error_bound.reserve(static_cast<size_t>(horizon));

  // Below sqrt(λ) the confidence set is empty and the bonus vanishes.
  const bool has_bonus = beta > 0.0 && beta * beta >= lambda;
  auto optimistic_reward = [&](RewardTable& uncertainty_out) {
    RewardTable opt = estimator.estimate();
    if (has_bonus) {
      uncertainty_out = estimator.uncertainty(beta, options.scope);
      opt += uncertainty_out.unaryExpr([beta](double u) { return bonus_from_uncertainty(beta, u); });
    } else {
      uncertainty_out = RewardTable::Zero(instance.contexts(), instance.actions());
    }
    return opt;
  };

  Rng rng(seed);
  std::discrete_distribution<Index> context_dist(instance.d0.data(),
                                                 instance.d0.data() + instance.d0.size());
  RewardTable uncertainty;
  RewardTable optimistic = optimistic_reward(uncertainty);
  EluderSum eluder;
  double cumulative = 0.0;

  for (Index t = 1; t <= horizon; ++t) {
    if (options.cancel != nullptr && options.cancel->load(std::memory_order_relaxed)) {
      result.completed = false;
      break;
    }
    const PolicyTable pi = gibbs_policy(optimistic, instance.eta, instance.reference);

    const Index x = context_dist(rng);
    // Rows of a column-major table are strided; copy before sampling.
    const Vector row = pi.row(x).transpose();
    std::discrete_distribution<Index> action_dist(row.data(), row.data() + row.size());
    const Index a = action_dist(rng);
    const double r = env_step(instance, x, a, rng);

    const double gap = result.optimal_value -
                       objective(pi, instance.reward, instance.eta, instance.reference, instance.d0);
    cumulative += gap;
    const double u = uncertainty(x, a);
    const bool violated = ((optimistic - instance.reward).array() < -1e-12).any();

    RegretTrace& tr = result.trace;
    tr.per_round_gap.push_back(gap);
    tr.cumulative.push_back(cumulative);
    tr.uncertainty_at_play.push_back(u);
    tr.bonus_at_play.push_back(has_bonus ? bonus_from_uncertainty(beta, u) : 0.0);
    tr.eluder_sum_curve.push_back(eluder.add(u));
    tr.optimism_flags.push_back(violated ? 1 : 0);
    if (violated) tr.optimism_violations.push_back(t);
    result.squared_error_bound.push_back(squared_error_bound(instance, optimistic));
    if (options.keep_policies) result.policies.push_back(pi);

    estimator.observe(x, a, r);
    optimistic = optimistic_reward(uncertainty);
  }
  result.final_policy = gibbs_policy(optimistic, instance.eta, instance.reference);
  return result;
}

}  // namespace

BanditRunResult kl_ucb_run(const BanditInstance& instance, const FunctionClass& cls,
                           Index horizon, double delta, double lambda, std::uint64_t seed,
                           const BanditRunOptions& options) {
  instance.validate();
  require_realizable(instance, cls);
  if (horizon < 0) throw ConfigError("T must be >= 0");
  if (horizon == 0) {
    BanditRunResult empty;
    empty.optimal_value = instance.optimal_value();
    empty.final_policy = instance.reference;
    return empty;
  }
  const double base_beta =
      beta_schedule(class_cardinality(cls), horizon, 1, delta, BetaVariant::bandit);
  require_lambda_fits_beta(lambda, base_beta);
  if (!(options.bonus_scale >= 0.0)) throw ConfigError("bonus scale must be >= 0");
  const double beta = base_beta * options.bonus_scale;

  if (const auto* finite = std::get_if<FiniteFunctionClass>(&cls)) {
    return run_with(instance, FiniteEstimator(*finite, lambda), horizon, beta, lambda, seed,
                    options);
  }
  return run_with(instance, LinearEstimator(std::get<LinearFunctionClass>(cls), lambda), horizon,
                  beta, lambda, seed, options);
}

}  // namespace klrl
