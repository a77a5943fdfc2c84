#include "klrl/theory_checks.hpp"

#include "klrl/instances.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

namespace klrl {

CheckReport make_report(std::string name, Index trials, double max_violation, double tolerance) {
  return {std::move(name), trials, max_violation, tolerance, max_violation <= tolerance};
}

std::string check_csv_header() { return "name,trials,max_violation,tolerance,pass"; }

std::string to_csv_row(const CheckReport& report) {
  char buf[128];
  std::snprintf(buf, sizeof buf, ",%lld,%.17g,%.17g,%d", static_cast<long long>(report.trials),
                report.max_violation, report.tolerance, report.pass ? 1 : 0);
  return report.name + buf;
}

double compensated_sum(const std::vector<double>& values) {
  double sum = 0.0;
  double carry = 0.0;
  for (const double v : values) {
    const double t = sum + v;
    carry += std::abs(sum) >= std::abs(v) ? (sum - t) + v : (v - t) + sum;
    sum = t;
  }
  return sum + carry;
}

// --- gradient -------------------------------------------------------------------

namespace {

struct GradientInstance {
  Vector reward;
  Vector reward_star;
  Vector reference;
  double eta = 1.0;
};

GradientInstance random_gradient_instance(Rng& rng) {
  std::uniform_int_distribution<Index> actions_dist(2, 8);
  const Index actions = actions_dist(rng);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  GradientInstance g;
  g.reward = Vector::NullaryExpr(actions, [&] { return unit(rng); });
  g.reward_star = Vector::NullaryExpr(actions, [&] { return unit(rng); });
  g.reference = random_full_support_distribution(rng, actions);
  g.eta = std::uniform_real_distribution<double>(0.5, 8.0)(rng);
  return g;
}

}  // namespace

CheckReport gradient_check(Index trials, std::uint64_t seed, double step, double tolerance) {
  if (trials < 1) throw InvalidInput("gradient_check: trials must be >= 1");
  if (!(step > 0.0)) throw InvalidInput("gradient_check: step must be positive");
  Rng rng(seed);
  double worst = 0.0;
  for (Index k = 0; k < trials; ++k) {
    const GradientInstance g = random_gradient_instance(rng);
    const Vector analytic = delta_gradient(g.reward, g.reward_star, g.eta, g.reference);
    Vector numeric(analytic.size());
    for (Index a = 0; a < analytic.size(); ++a) {
      Vector up = g.reward;
      Vector down = g.reward;
      up(a) += step;
      down(a) -= step;
      numeric(a) = (delta_value(up, g.reward_star, g.eta, g.reference) -
                    delta_value(down, g.reward_star, g.eta, g.reference)) /
                   (2.0 * step);
    }
    const double scale =
        std::max({analytic.lpNorm<Eigen::Infinity>(), numeric.lpNorm<Eigen::Infinity>(), kGradientFloor});
    worst = std::max(worst, (analytic - numeric).lpNorm<Eigen::Infinity>() / scale);
  }
  return make_report("gradient", trials, worst, tolerance);
}

CheckReport gradient_sum_check(Index trials, std::uint64_t seed, double tolerance) {
  if (trials < 1) throw InvalidInput("gradient_sum_check: trials must be >= 1");
  Rng rng(seed);
  double worst = 0.0;
  for (Index k = 0; k < trials; ++k) {
    const GradientInstance g = random_gradient_instance(rng);
    worst = std::max(worst,
                     std::abs(delta_gradient(g.reward, g.reward_star, g.eta, g.reference).sum()));
  }
  return make_report("gradient_sum", trials, worst, tolerance);
}

// --- U(lambda) ----------------------------------------------------------------------

double u_lambda(const Vector& delta, const Vector& reward_star, double eta, const Vector& reference,
                double lambda) {
  const Vector pi = gibbs_distribution(reward_star + lambda * delta, eta, reference);
  return lambda * pi.dot(delta.cwiseAbs2());
}

CheckReport u_lambda_check(Index trials, Index grid_size, std::uint64_t seed, double tolerance) {
  if (trials < 1 || grid_size < 2) throw InvalidInput("u_lambda_check: need trials >= 1, grid >= 2");
  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst = 0.0;
  for (Index k = 0; k < trials; ++k) {
    const GradientInstance g = random_gradient_instance(rng);
    // Optimistic by construction: δ = R_opt − R* with R_opt ≥ R*.
    const Vector r_opt =
        g.reward_star + (Vector::Ones(g.reward_star.size()) - g.reward_star).cwiseProduct(
                            Vector::NullaryExpr(g.reward_star.size(), [&] { return unit(rng); }));
    const Vector delta = r_opt - g.reward_star;
    const double at_one = u_lambda(delta, g.reward_star, g.eta, g.reference, 1.0);
    double prev = 0.0;
    for (Index i = 0; i < grid_size; ++i) {
      const double lambda = static_cast<double>(i) / static_cast<double>(grid_size - 1);
      const double u = u_lambda(delta, g.reward_star, g.eta, g.reference, lambda);
      if (i > 0) worst = std::max(worst, prev - u);
      worst = std::max(worst, u - at_one);
      prev = u;
    }
  }
  return make_report("u_lambda", trials, worst, tolerance);
}

// --- third moment ---------------------------------------------------------------------

double third_moment_gap(const DiscreteVariable& x) {
  if (x.values.size() != x.probabilities.size() || x.values.size() == 0) {
    throw InvalidInput("third_moment_gap: values and probabilities must match and be nonempty");
  }
  require_distribution(x.probabilities, "third_moment_gap probabilities");
  const double m1 = x.probabilities.dot(x.values);
  const double m2 = x.probabilities.dot(x.values.cwiseAbs2());
  const double m3 = x.probabilities.dot(x.values.array().cube().matrix());
  return m3 - m2 * m1;
}

CheckReport third_moment_check(const std::vector<DiscreteVariable>& variables, double tolerance) {
  double worst = 0.0;
  for (const DiscreteVariable& x : variables) {
    for (Index i = 0; i < x.values.size(); ++i) {
      if (x.probabilities.size() == x.values.size() && x.probabilities(i) > 0.0 &&
          x.values(i) < 0.0) {
        throw PreconditionError("third_moment_check: support must be nonnegative");
      }
    }
    worst = std::max(worst, -third_moment_gap(x));
  }
  return make_report("third_moment", static_cast<Index>(variables.size()), worst, tolerance);
}

// --- generalization --------------------------------------------------------------------

double generalization_bound(double cardinality, Index horizon, double delta) {
  if (!(cardinality >= 1.0) || horizon < 1 || !(delta > 0.0 && delta < 1.0)) {
    throw ConfigError("generalization_bound: need N >= 1, T >= 1, delta in (0, 1)");
  }
  return 8.0 * std::log(cardinality * static_cast<double>(horizon) / delta);
}

CheckReport generalization_check(const FiniteFunctionClass& cls, Index truth, const NoiseSpec& noise,
                                 Index runs, Index horizon, double delta, std::uint64_t seed) {
  if (runs < 1) throw InvalidInput("generalization_check: runs must be >= 1");
  if (truth < 0 || truth >= cls.size()) throw InvalidInput("generalization_check: truth index");
  noise.validate();
  const double bound = generalization_bound(static_cast<double>(cls.size()), horizon, delta);
  const Index cells = cls.contexts() * cls.actions();
  Index violations = 0;
  for (Index run = 0; run < runs; ++run) {
    Rng rng(seed + static_cast<std::uint64_t>(run));
    std::uniform_int_distribution<Index> cell_dist(0, cells - 1);
    FiniteLearner learner(cls, 1.0);
    bool violated = false;
    for (Index t = 0; t < horizon; ++t) {
      const Index cell = cell_dist(rng);
      const Index x = cell / cls.actions();
      const Index a = cell % cls.actions();
      learner.add_observation(x, a, cls.value(truth, x, a) + noise.sample(rng));
      if (learner.pair_sum(learner.erm(), truth) > bound) violated = true;
    }
    if (violated) ++violations;
  }
  const double frequency = static_cast<double>(violations) / static_cast<double>(runs);
  const double slack = 2.0 * std::sqrt(delta * (1.0 - delta) / static_cast<double>(runs));
  return make_report("generalization", runs, frequency, delta + slack);
}

// --- online to batch ----------------------------------------------------------------------

namespace {

MixtureResult mixture_from_objectives(const std::vector<double>& objectives, double optimal) {
  if (objectives.empty()) throw InvalidInput("online_to_batch: policy list is empty");
  const auto n = static_cast<double>(objectives.size());
  std::vector<double> gaps;
  gaps.reserve(objectives.size());
  for (const double j : objectives) gaps.push_back(optimal - j);
  MixtureResult out;
  out.components = static_cast<Index>(objectives.size());
  out.mixture_objective = compensated_sum(objectives) / n;
  out.mixture_gap = optimal - out.mixture_objective;
  out.average_gap = compensated_sum(gaps) / n;
  return out;
}

}  // namespace

MixtureResult online_to_batch(const std::vector<PolicyTable>& policies,
                              const BanditInstance& instance) {
  std::vector<double> objectives;
  objectives.reserve(policies.size());
  for (const PolicyTable& pi : policies) {
    objectives.push_back(
        objective(pi, instance.reward, instance.eta, instance.reference, instance.d0));
  }
  return mixture_from_objectives(objectives, instance.optimal_value());
}

MixtureResult online_to_batch(const std::vector<MdpPolicy>& policies, const MdpInstance& instance) {
  std::vector<double> objectives;
  objectives.reserve(policies.size());
  for (const MdpPolicy& pi : policies) objectives.push_back(policy_value(instance, pi).objective);
  return mixture_from_objectives(objectives, optimal_backward_induction(instance).objective);
}

// --- suite ------------------------------------------------------------------------------------

std::vector<CheckReport> run_all_checks(std::uint64_t seed) {
  std::vector<CheckReport> reports;
  reports.push_back(gradient_check(100, seed));
  reports.push_back(gradient_sum_check(100, seed));
  reports.push_back(u_lambda_check(200, 101, seed));

  Rng rng(seed);
  std::vector<DiscreteVariable> variables;
  std::uniform_int_distribution<Index> support(1, 8);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int k = 0; k < 200; ++k) {
    const Index n = support(rng);
    DiscreteVariable x;
    x.values = Vector::NullaryExpr(n, [&] { return unit(rng); });
    x.probabilities = random_distribution(rng, n);
    variables.push_back(std::move(x));
  }
  reports.push_back(third_moment_check(variables));

  const RewardTable truth = RewardTable::NullaryExpr(3, 3, [&] { return unit(rng); });
  const FiniteFunctionClass cls = random_finite_class(rng, truth, 10, 3);
  reports.push_back(generalization_check(cls, 3, NoiseSpec::gaussian(0.5), 400, 100, 0.05, seed));

  // Averaging identity on a short KL-UCB run.
  const BanditInstance inst = random_bandit(rng, 2, 3);
  const FiniteFunctionClass bandit_cls = random_finite_class(rng, inst.reward, 6, 2);
  BanditRunOptions options;
  options.keep_policies = true;
  const BanditRunResult run = kl_ucb_run(inst, bandit_cls, 50, 0.1, 1.0, seed, options);
  const MixtureResult mix = online_to_batch(run.policies, inst);
  const double trace_mean = compensated_sum(run.trace.per_round_gap) /
                            static_cast<double>(run.trace.rounds());
  reports.push_back(make_report("online_to_batch", run.trace.rounds(),
                                std::max(std::abs(mix.mixture_gap - mix.average_gap),
                                         std::abs(mix.mixture_gap - trace_mean)),
                                1e-12));
  return reports;
}

}  // namespace klrl
