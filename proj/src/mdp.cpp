#include "klrl/mdp.hpp"

#include <Eigen/QR>

#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <string>

namespace klrl {

namespace {

void require_step(const MdpInstance& instance, Index h) {
  if (h < 0 || h >= instance.horizon) {
    throw InvalidInput("step " + std::to_string(h) + " out of range");
  }
}

Index sample(const Vector& weights, Rng& rng) {
  std::discrete_distribution<Index> dist(weights.data(), weights.data() + weights.size());
  return dist(rng);
}

/// E_{a∼π(·|s)}[Q(s,a)] − (1/η)·KL, skipping zero-probability actions so that
/// unreachable −∞ entries do not poison the sum.
double regularized_value(const Eigen::Ref<const Vector>& q_row, const Eigen::Ref<const Vector>& pi_row,
                         const Eigen::Ref<const Vector>& ref_row, double eta) {
  const double kl = kl_divergence(pi_row, ref_row);
  if (std::isinf(kl)) return -std::numeric_limits<double>::infinity();
  double total = 0.0;
  for (Index a = 0; a < q_row.size(); ++a) {
    if (pi_row(a) > 0.0) total += pi_row(a) * q_row(a);
  }
  return total - kl / eta;
}

}  // namespace

void MdpInstance::validate() const {
  if (states <= 0 || actions <= 0 || horizon <= 0) {
    throw InvalidInput("MDP sizes S, A, H must be positive");
  }
  const auto h_count = static_cast<size_t>(horizon);
  if (transitions.size() != h_count || rewards.size() != h_count || reference.size() != h_count) {
    throw InvalidInput("MDP needs one transition, reward and reference table per step");
  }
  if (d0.size() != states) throw InvalidInput("d0 size differs from S");
  require_distribution(d0, "d0");
  if (!(eta > 0.0) || !std::isfinite(eta)) throw InvalidInput("eta must be positive and finite");
  for (size_t h = 0; h < h_count; ++h) {
    const std::string step = " at step " + std::to_string(h);
    if (transitions[h].rows() != states * actions || transitions[h].cols() != states) {
      throw InvalidInput("transition shape" + step);
    }
    for (Index r = 0; r < transitions[h].rows(); ++r) {
      require_distribution(transitions[h].row(r), "transition row " + std::to_string(r) + step);
    }
    if (rewards[h].rows() != states || rewards[h].cols() != actions || !rewards[h].allFinite()) {
      throw InvalidInput("reward table" + step);
    }
    if (reference[h].rows() != states || reference[h].cols() != actions) {
      throw InvalidInput("reference shape" + step);
    }
    for (Index s = 0; s < states; ++s) {
      require_distribution(reference[h].row(s), "reference row " + std::to_string(s) + step);
    }
  }
  noise.validate();
}

Vector soft_values(const RewardTable& q, double eta, const PolicyTable& reference) {
  Vector v(q.rows());
  for (Index s = 0; s < q.rows(); ++s) v(s) = soft_value(q.row(s), eta, reference.row(s));
  return v;
}

RewardTable bellman_backup(const MdpInstance& instance, Index h, const Vector& v_next) {
  require_step(instance, h);
  if (v_next.size() != instance.states) throw InvalidInput("bellman_backup: v_next size");
  const Vector expected = instance.transitions[static_cast<size_t>(h)] * v_next;
  RewardTable out = instance.rewards[static_cast<size_t>(h)];
  for (Index s = 0; s < instance.states; ++s) {
    for (Index a = 0; a < instance.actions; ++a) out(s, a) += expected(instance.row(s, a));
  }
  return out;
}

RewardTable bellman_apply(const MdpInstance& instance, Index h, const RewardTable& f_next) {
  require_step(instance, h);
  if (f_next.rows() != instance.states || f_next.cols() != instance.actions || !f_next.allFinite()) {
    throw InvalidInput("bellman_apply: f_next must be a finite S x A table");
  }
  if (h + 1 == instance.horizon) {
    if (!f_next.isZero(0.0)) throw InvalidInput("bellman_apply: f_{H+1} must be zero");
    return bellman_backup(instance, h, Vector::Zero(instance.states));
  }
  const Vector v_next =
      soft_values(f_next, instance.eta, instance.reference[static_cast<size_t>(h + 1)]);
  return bellman_backup(instance, h, v_next);
}

OptimalSolution optimal_backward_induction(const MdpInstance& instance, double q_tolerance) {
  instance.validate();
  const auto h_count = static_cast<size_t>(instance.horizon);
  OptimalSolution out;
  out.values.q.resize(h_count);
  out.values.v.assign(h_count + 1, Vector::Zero(instance.states));
  out.policy.resize(h_count);
  for (Index h = instance.horizon - 1; h >= 0; --h) {
    const auto hs = static_cast<size_t>(h);
    RewardTable q = bellman_backup(instance, h, out.values.v[hs + 1]);
    if (q.minCoeff() < -q_tolerance || q.maxCoeff() > 1.0 + q_tolerance) {
      throw InvalidInput("Q* leaves [0, 1] at step " + std::to_string(h) + " (range " +
                         std::to_string(q.minCoeff()) + ", " + std::to_string(q.maxCoeff()) + ")");
    }
    out.values.v[hs] = soft_values(q, instance.eta, instance.reference[hs]);
    out.policy[hs] = gibbs_policy(q, instance.eta, instance.reference[hs]);
    out.values.q[hs] = std::move(q);
  }
  out.objective = instance.d0.dot(out.values.v[0]);
  return out;
}

std::vector<Vector> state_occupancy(const MdpInstance& instance, const MdpPolicy& pi) {
  std::vector<Vector> occ(static_cast<size_t>(instance.horizon), Vector::Zero(instance.states));
  occ[0] = instance.d0;
  for (Index h = 0; h + 1 < instance.horizon; ++h) {
    const auto hs = static_cast<size_t>(h);
    for (Index s = 0; s < instance.states; ++s) {
      if (occ[hs](s) <= 0.0) continue;
      for (Index a = 0; a < instance.actions; ++a) {
        const double w = occ[hs](s) * pi[hs](s, a);
        if (w > 0.0) occ[hs + 1] += w * instance.transitions[hs].row(instance.row(s, a)).transpose();
      }
    }
  }
  return occ;
}

PolicyEvaluation policy_value(const MdpInstance& instance, const MdpPolicy& pi) {
  const auto h_count = static_cast<size_t>(instance.horizon);
  if (pi.size() != h_count) throw InvalidInput("policy_value: need one policy table per step");
  for (size_t h = 0; h < h_count; ++h) {
    if (pi[h].rows() != instance.states || pi[h].cols() != instance.actions) {
      throw InvalidInput("policy_value: policy shape at step " + std::to_string(h));
    }
  }
  const double neg_inf = -std::numeric_limits<double>::infinity();
  const std::vector<Vector> occ = state_occupancy(instance, pi);

  PolicyEvaluation out;
  out.values.q.resize(h_count);
  out.values.v.assign(h_count + 1, Vector::Zero(instance.states));
  for (Index h = instance.horizon - 1; h >= 0; --h) {
    const auto hs = static_cast<size_t>(h);
    RewardTable q = instance.rewards[hs];
    const Matrix& p = instance.transitions[hs];
    for (Index s = 0; s < instance.states; ++s) {
      for (Index a = 0; a < instance.actions; ++a) {
        double next = 0.0;
        for (Index s2 = 0; s2 < instance.states; ++s2) {
          const double w = p(instance.row(s, a), s2);
          if (w > 0.0) next += w * out.values.v[hs + 1](s2);
        }
        q(s, a) += next;
      }
    }
    for (Index s = 0; s < instance.states; ++s) {
      const double v = regularized_value(q.row(s).transpose(), pi[hs].row(s).transpose(),
                                         instance.reference[hs].row(s).transpose(), instance.eta);
      if (std::isinf(v) && occ[hs](s) > 0.0) out.support_violation = true;
      out.values.v[hs](s) = v;
    }
    out.values.q[hs] = std::move(q);
  }
  if (out.support_violation) {
    out.objective = neg_inf;
    return out;
  }
  double total = 0.0;
  for (Index s = 0; s < instance.states; ++s) {
    if (instance.d0(s) > 0.0) total += instance.d0(s) * out.values.v[0](s);
  }
  out.objective = total;
  return out;
}

EpisodeTrace rollout(const MdpInstance& instance, const MdpPolicy& pi, Rng& rng) {
  EpisodeTrace trace;
  trace.reserve(static_cast<size_t>(instance.horizon));
  Index s = sample(instance.d0, rng);
  for (Index h = 0; h < instance.horizon; ++h) {
    const auto hs = static_cast<size_t>(h);
    const Index a = sample(pi[hs].row(s).transpose(), rng);
    const double r = instance.rewards[hs](s, a) + instance.noise.sample(rng);
    const Index next = sample(instance.transitions[hs].row(instance.row(s, a)).transpose(), rng);
    trace.push_back({s, a, r, next});
    s = next;
  }
  return trace;
}

void rescale_rewards_to_unit_q(MdpInstance& instance) {
  auto max_q = [&](double c) {
    MdpInstance scaled = instance;
    for (auto& r : scaled.rewards) r *= c;
    double best = 0.0;
    Vector v = Vector::Zero(instance.states);
    for (Index h = instance.horizon - 1; h >= 0; --h) {
      const RewardTable q = bellman_backup(scaled, h, v);
      best = std::max(best, q.maxCoeff());
      v = soft_values(q, scaled.eta, scaled.reference[static_cast<size_t>(h)]);
    }
    return best;
  };
  double c = 1.0;
  if (max_q(1.0) > 1.0) {
    // Q* is monotone in the reward scale; bisect for max Q* = 1 from below.
    double lo = 0.0;
    double hi = 1.0;
    for (int it = 0; it < 100; ++it) {
      const double mid = 0.5 * (lo + hi);
      (max_q(mid) <= 1.0 ? lo : hi) = mid;
    }
    c = lo;
  }
  for (auto& r : instance.rewards) r *= c;
  instance.reward_scale *= c;
}

// --- class assumptions ------------------------------------------------------

namespace {

bool member_of(const FunctionClass& cls, const RewardTable& table, double tol) {
  if (const auto* finite = std::get_if<FiniteFunctionClass>(&cls)) {
    return finite->find(table, tol) >= 0;
  }
  const auto& linear = std::get<LinearFunctionClass>(cls);
  Vector target(table.size());
  for (Index s = 0; s < table.rows(); ++s) {
    for (Index a = 0; a < table.cols(); ++a) target(linear.cell(s, a)) = table(s, a);
  }
  const Vector theta = linear.features().colPivHouseholderQr().solve(target);
  return (linear.features() * theta - target).cwiseAbs().maxCoeff() <= tol &&
         theta.norm() <= linear.norm_bound() * (1.0 + 1e-9);
}

void require_shapes(const MdpInstance& instance, const std::vector<FunctionClass>& classes) {
  if (classes.size() != static_cast<size_t>(instance.horizon)) {
    throw ConfigError("need one function class per step");
  }
  for (size_t h = 0; h < classes.size(); ++h) {
    const bool ok = std::visit(
        [&](const auto& c) { return c.contexts() == instance.states && c.actions() == instance.actions; },
        classes[h]);
    if (!ok) throw ConfigError("function class shape differs from S x A at step " + std::to_string(h));
  }
}

}  // namespace

void require_realizable(const MdpInstance& instance, const std::vector<FunctionClass>& classes,
                        const ValueFunctions& optimal) {
  require_shapes(instance, classes);
  for (size_t h = 0; h < classes.size(); ++h) {
    if (!member_of(classes[h], optimal.q[h], 1e-8)) {
      throw ConfigError("Q* is not realizable in the class at step " + std::to_string(h));
    }
  }
}

void require_complete(const MdpInstance& instance, const std::vector<FunctionClass>& classes) {
  require_shapes(instance, classes);
  for (Index h = 0; h < instance.horizon; ++h) {
    const auto hs = static_cast<size_t>(h);
    if (const auto* linear = std::get_if<LinearFunctionClass>(&classes[hs])) {
      Eigen::ColPivHouseholderQR<Matrix> qr(linear->features());
      if (qr.rank() < instance.states * instance.actions) {
        throw ConfigError("linear class at step " + std::to_string(h) +
                          " does not span all tables; completeness cannot be verified");
      }
      continue;
    }
    std::vector<RewardTable> next_members;
    if (h + 1 == instance.horizon) {
      next_members.push_back(RewardTable::Zero(instance.states, instance.actions));
    } else if (const auto* finite_next = std::get_if<FiniteFunctionClass>(&classes[hs + 1])) {
      for (Index i = 0; i < finite_next->size(); ++i) next_members.push_back(finite_next->member(i));
    } else {
      throw ConfigError("finite class at step " + std::to_string(h) +
                        " cannot be complete for a linear class at the next step");
    }
    for (const RewardTable& f : next_members) {
      if (!member_of(classes[hs], bellman_apply(instance, h, f), 1e-8)) {
        throw ConfigError("Bellman completeness fails at step " + std::to_string(h));
      }
    }
  }
}

// --- KL-LSVI-UCB ----------------------------------------------------------------

namespace {

/// Per-step regression data with targets recomputed each episode from
/// aggregated (s, a, s') counts and reward sums.
struct StepData {
  Matrix next_counts;  ///< (S·A) × S
  Vector visit_counts;  ///< S·A
  Vector reward_sums;   ///< S·A

  StepData(Index states, Index actions)
      : next_counts(Matrix::Zero(states * actions, states)),
        visit_counts(Vector::Zero(states * actions)),
        reward_sums(Vector::Zero(states * actions)) {}

  /// Σ over records at each cell of r + v_next(s').
  Vector target_sums(const Vector& v_next) const { return reward_sums + next_counts * v_next; }
};

class StepEstimator {
 public:
  StepEstimator(const FunctionClass& cls, double lambda, Index states, Index actions)
      : cls_(&cls), data_(states, actions), states_(states), actions_(actions) {
    if (const auto* f = std::get_if<FiniteFunctionClass>(&cls)) {
      finite_.emplace(*f, lambda);
    } else {
      linear_.emplace(std::get<LinearFunctionClass>(cls), lambda);
    }
  }

  void observe(Index s, Index a, double r, Index next) {
    const Index cell = s * actions_ + a;
    data_.next_counts(cell, next) += 1.0;
    data_.visit_counts(cell) += 1.0;
    data_.reward_sums(cell) += r;
    if (finite_) {
      finite_->add_point(s, a);
    } else {
      linear_->add_point(s, a);
    }
  }

  /// Least-squares fit against r + v_next(s'); also returns the ERM index (finite).
  RewardTable fit(const Vector& v_next, Index& erm_index) const {
    const Vector sums = data_.target_sums(v_next);
    if (finite_) {
      const auto& cls = std::get<FiniteFunctionClass>(*cls_);
      // Σᵢ(f − yᵢ)² = Σ_cells n·f² − 2·f·Σy + const.
      erm_index = 0;
      double best = 0.0;
      for (Index j = 0; j < cls.size(); ++j) {
        const RewardTable& m = cls.member(j);
        double loss = 0.0;
        for (Index s = 0; s < states_; ++s) {
          for (Index a = 0; a < actions_; ++a) {
            const Index cell = s * actions_ + a;
            const double n = data_.visit_counts(cell);
            if (n > 0.0) loss += n * m(s, a) * m(s, a) - 2.0 * m(s, a) * sums(cell);
          }
        }
        if (j == 0 || loss < best) {
          best = loss;
          erm_index = j;
        }
      }
      return cls.member(erm_index);
    }
    const auto& cls = std::get<LinearFunctionClass>(*cls_);
    const Vector rhs = cls.features().transpose() * sums;
    erm_index = -1;
    return cls.table(linear_->solve(rhs));
  }

  RewardTable uncertainty(Index erm_index, double beta, UncertaintyScope scope) const {
    if (finite_) {
      const auto members = scope == UncertaintyScope::full_class
                               ? finite_->all_members()
                               : finite_->confidence_members(erm_index, beta);
      return finite_->uncertainty_table(members);
    }
    return linear_->uncertainty_table();
  }

 private:
  const FunctionClass* cls_;
  StepData data_;
  Index states_;
  Index actions_;
  std::optional<FiniteLearner> finite_;
  std::optional<LinearLearner> linear_;
};

double expected_sq_error(const MdpInstance& instance, const MdpPolicy& pi,
                         const std::vector<RewardTable>& errors) {
  const std::vector<Vector> occ = state_occupancy(instance, pi);
  double total = 0.0;
  for (size_t h = 0; h < errors.size(); ++h) {
    for (Index s = 0; s < instance.states; ++s) {
      if (occ[h](s) <= 0.0) continue;
      total += occ[h](s) * pi[h].row(s).dot(errors[h].row(s).cwiseAbs2());
    }
  }
  return total;
}

}  // namespace

MdpRunResult kl_lsvi_ucb_run(const MdpInstance& instance, const std::vector<FunctionClass>& classes,
                             Index episodes, double delta, double lambda, std::uint64_t seed,
                             const MdpRunOptions& options) {
  const OptimalSolution optimal = optimal_backward_induction(instance);
  require_realizable(instance, classes, optimal.values);
  if (options.check_completeness) require_complete(instance, classes);
  if (episodes < 0) throw ConfigError("T must be >= 0");
  if (!(options.bonus_scale >= 0.0)) throw ConfigError("bonus scale must be >= 0");
  if (!(options.bonus_cardinality >= 1.0)) throw ConfigError("bonus class cardinality must be >= 1");

  const Index horizon = instance.horizon;
  const auto h_count = static_cast<size_t>(horizon);
  MdpRunResult result;
  result.optimal_value = optimal.objective;
  if (episodes == 0) return result;

  result.beta.resize(h_count);
  for (size_t h = 0; h < h_count; ++h) {
    const double n_next = h + 1 < h_count ? class_cardinality(classes[h + 1]) : 1.0;
    const double n_h = class_cardinality(classes[h]) * n_next * options.bonus_cardinality;
    const double base = beta_schedule(n_h, episodes, horizon, delta, BetaVariant::mdp);
    require_lambda_fits_beta(lambda, base);
    result.beta[h] = base * options.bonus_scale;
  }

  std::vector<StepEstimator> estimators;
  estimators.reserve(h_count);
  for (size_t h = 0; h < h_count; ++h) {
    estimators.emplace_back(classes[h], lambda, instance.states, instance.actions);
  }

  Rng rng(seed);
  EluderSum eluder;
  double cumulative = 0.0;
  RegretTrace& tr = result.trace;
  tr.reserve(episodes);

  for (Index t = 1; t <= episodes; ++t) {
    if (options.cancel != nullptr && options.cancel->load(std::memory_order_relaxed)) {
      result.completed = false;
      break;
    }

    // Backward pass over the data from episodes 1..t-1.
    EpisodeEstimates est;
    est.f_hat.resize(h_count);
    est.bonus.resize(h_count);
    est.q_hat.resize(h_count);
    est.v_hat.assign(h_count + 1, Vector::Zero(instance.states));
    std::vector<RewardTable> uncertainty(h_count);
    MdpPolicy pi(h_count);
    for (Index h = horizon - 1; h >= 0; --h) {
      const auto hs = static_cast<size_t>(h);
      const double beta = result.beta[hs];
      Index erm = 0;
      est.f_hat[hs] = estimators[hs].fit(est.v_hat[hs + 1], erm);
      if (beta > 0.0 && beta * beta >= lambda) {
        uncertainty[hs] = estimators[hs].uncertainty(erm, beta, options.scope);
        est.bonus[hs] =
            uncertainty[hs].unaryExpr([beta](double u) { return bonus_from_uncertainty(beta, u); });
      } else {
        uncertainty[hs] = RewardTable::Zero(instance.states, instance.actions);
        est.bonus[hs] = RewardTable::Zero(instance.states, instance.actions);
      }
      est.q_hat[hs] = est.f_hat[hs] + est.bonus[hs];
      est.v_hat[hs] = soft_values(est.q_hat[hs], instance.eta, instance.reference[hs]);
      pi[hs] = gibbs_policy(est.q_hat[hs], instance.eta, instance.reference[hs]);
    }

    bool violated = false;
    std::vector<RewardTable> errors(h_count);
    for (size_t h = 0; h < h_count; ++h) {
      violated = violated || ((est.q_hat[h] - optimal.values.q[h]).array() < -1e-12).any();
      errors[h] = est.q_hat[h] - bellman_backup(instance, static_cast<Index>(h), est.v_hat[h + 1]);
    }

    const double gap = optimal.objective - policy_value(instance, pi).objective;
    cumulative += gap;

    EpisodeTrace episode = rollout(instance, pi, rng);
    double bonus_sum = 0.0;
    double uncertainty_sum = 0.0;
    double eluder_total = 0.0;
    double sq_error = 0.0;
    for (size_t h = 0; h < h_count; ++h) {
      const Step& st = episode[h];
      const double u = uncertainty[h](st.state, st.action);
      bonus_sum += est.bonus[h](st.state, st.action);
      uncertainty_sum += u;
      eluder_total = eluder.add(u);
      const double e = errors[h](st.state, st.action);
      sq_error += e * e;
      estimators[h].observe(st.state, st.action, st.reward, st.next_state);
    }

    tr.per_round_gap.push_back(gap);
    tr.cumulative.push_back(cumulative);
    tr.bonus_at_play.push_back(bonus_sum);
    tr.uncertainty_at_play.push_back(uncertainty_sum);
    tr.eluder_sum_curve.push_back(eluder_total);
    tr.optimism_flags.push_back(violated ? 1 : 0);
    if (violated) tr.optimism_violations.push_back(t);
    tr.sum_sq_bellman_error.push_back(sq_error);
    result.expected_sq_bellman_error.push_back(expected_sq_error(instance, pi, errors));

    if (options.keep_policies) result.policies.push_back(pi);
    if (options.keep_estimates) {
      result.estimates.push_back(std::move(est));
      result.episodes.push_back(std::move(episode));
    }
  }
  return result;
}

std::vector<RewardTable> bellman_errors(const MdpInstance& instance,
                                        const EpisodeEstimates& estimates) {
  std::vector<RewardTable> out(static_cast<size_t>(instance.horizon));
  for (Index h = 0; h < instance.horizon; ++h) {
    const auto hs = static_cast<size_t>(h);
    const RewardTable next = h + 1 < instance.horizon
                                 ? estimates.q_hat[hs + 1]
                                 : RewardTable::Zero(instance.states, instance.actions);
    out[hs] = estimates.q_hat[hs] - bellman_apply(instance, h, next);
  }
  return out;
}

std::vector<double> bellman_error_diagnostics(const MdpInstance& instance,
                                              const MdpRunResult& run) {
  if (run.estimates.size() != run.episodes.size()) {
    throw InvalidInput("bellman_error_diagnostics: run was not logged with keep_estimates");
  }
  std::vector<double> out;
  out.reserve(run.episodes.size());
  for (size_t t = 0; t < run.episodes.size(); ++t) {
    const auto errors = bellman_errors(instance, run.estimates[t]);
    double total = 0.0;
    for (size_t h = 0; h < errors.size(); ++h) {
      const Step& st = run.episodes[t][h];
      total += errors[h](st.state, st.action) * errors[h](st.state, st.action);
    }
    out.push_back(total);
  }
  return out;
}

}  // namespace klrl
