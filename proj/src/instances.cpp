#include "klrl/instances.hpp"

#include <cmath>
#include <random>

namespace klrl {

Vector random_distribution(Rng& rng, Index n) {
  if (n <= 0) throw InvalidInput("random_distribution: n must be positive");
  std::exponential_distribution<double> exp1(1.0);
  Vector w(n);
  for (Index i = 0; i < n; ++i) w(i) = exp1(rng);
  return w / w.sum();
}

Vector random_full_support_distribution(Rng& rng, Index n, double floor) {
  if (!(floor >= 0.0 && floor < 1.0)) throw InvalidInput("floor must lie in [0, 1)");
  const Vector w = random_distribution(rng, n);
  const Vector mixed = (1.0 - floor) * w + Vector::Constant(n, floor / static_cast<double>(n));
  return mixed / mixed.sum();
}

BanditInstance random_bandit(Rng& rng, Index contexts, Index actions, double eta_min,
                             double eta_max, NoiseSpec noise) {
  if (contexts <= 0 || actions <= 0) throw InvalidInput("random_bandit: sizes must be positive");
  if (!(eta_min > 0.0 && eta_min <= eta_max)) throw InvalidInput("random_bandit: eta range");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  BanditInstance inst;
  inst.d0 = random_full_support_distribution(rng, contexts);
  inst.reward = RewardTable(contexts, actions);
  for (Index x = 0; x < contexts; ++x) {
    for (Index a = 0; a < actions; ++a) inst.reward(x, a) = unit(rng);
  }
  inst.reference = PolicyTable(contexts, actions);
  for (Index x = 0; x < contexts; ++x) {
    inst.reference.row(x) = random_full_support_distribution(rng, actions).transpose();
  }
  inst.eta = std::uniform_real_distribution<double>(eta_min, eta_max)(rng);
  inst.noise = noise;
  return inst;
}

MdpInstance random_mdp(Rng& rng, Index states, Index actions, Index horizon, double eta,
                       NoiseSpec noise) {
  if (states <= 0 || actions <= 0 || horizon <= 0) {
    throw InvalidInput("random_mdp: sizes must be positive");
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  MdpInstance m;
  m.states = states;
  m.actions = actions;
  m.horizon = horizon;
  m.eta = eta;
  m.noise = noise;
  m.d0 = random_full_support_distribution(rng, states);
  for (Index h = 0; h < horizon; ++h) {
    Matrix p(states * actions, states);
    for (Index r = 0; r < p.rows(); ++r) p.row(r) = random_distribution(rng, states).transpose();
    RewardTable reward(states, actions);
    for (Index s = 0; s < states; ++s) {
      for (Index a = 0; a < actions; ++a) reward(s, a) = unit(rng);
    }
    PolicyTable ref(states, actions);
    for (Index s = 0; s < states; ++s) {
      ref.row(s) = random_full_support_distribution(rng, actions).transpose();
    }
    m.transitions.push_back(std::move(p));
    m.rewards.push_back(std::move(reward));
    m.reference.push_back(std::move(ref));
  }
  m.validate();
  rescale_rewards_to_unit_q(m);
  return m;
}

FiniteFunctionClass random_finite_class(Rng& rng, const RewardTable& truth, Index size,
                                        Index truth_index) {
  if (size <= 0 || truth_index < 0 || truth_index >= size) {
    throw InvalidInput("random_finite_class: truth index outside the class");
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<RewardTable> members;
  members.reserve(static_cast<size_t>(size));
  for (Index i = 0; i < size; ++i) {
    if (i == truth_index) {
      members.push_back(truth);
      continue;
    }
    RewardTable m(truth.rows(), truth.cols());
    for (Index k = 0; k < m.size(); ++k) m(k) = unit(rng);
    members.push_back(std::move(m));
  }
  return FiniteFunctionClass(std::move(members));
}

namespace {

RewardTable two_arm(double r0, double r1) {
  RewardTable t(1, 2);
  t << r0, r1;
  return t;
}

}  // namespace

BanditInstance two_arm_bandit() {
  BanditInstance inst;
  inst.d0 = Vector::Ones(1);
  inst.reward = two_arm(0.2, 0.8);
  inst.reference = PolicyTable::Constant(1, 2, 0.5);
  inst.eta = 1.0;
  inst.noise = NoiseSpec::gaussian(0.5);
  return inst;
}

FiniteFunctionClass two_arm_class() {
  std::vector<RewardTable> members;
  for (const double u : {0.5, 0.2, 0.8, 0.35, 0.65, 0.0, 1.0, 0.1}) members.push_back(two_arm(u, 1.0 - u));
  return FiniteFunctionClass(std::move(members));
}

BanditInstance deceptive_bandit() {
  const double rare = std::exp(-8.0);
  BanditInstance inst;
  inst.d0 = Vector::Ones(1);
  inst.reward = two_arm(0.5, 1.0);
  inst.reference = PolicyTable(1, 2);
  inst.reference << 1.0 - rare, rare;
  inst.eta = 16.0;
  inst.noise = NoiseSpec::gaussian(0.5);
  return inst;
}

FiniteFunctionClass deceptive_class() {
  std::vector<RewardTable> members;
  for (const double v : {0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 1.0}) members.push_back(two_arm(0.5, v));
  return FiniteFunctionClass(std::move(members));
}

MdpInstance scaling_mdp() {
  Rng rng(20240601);
  return random_mdp(rng, 5, 3, 3, 1.0);
}

std::vector<FunctionClass> one_hot_classes(const MdpInstance& instance) {
  const double bound = std::sqrt(static_cast<double>(instance.states * instance.actions));
  std::vector<FunctionClass> classes;
  for (Index h = 0; h < instance.horizon; ++h) {
    classes.emplace_back(LinearFunctionClass::one_hot(instance.states, instance.actions, bound));
  }
  return classes;
}

std::vector<std::string> bandit_preset_names() { return {"two_arm", "deceptive", "random"}; }
std::vector<std::string> mdp_preset_names() { return {"scaling", "random"}; }

}  // namespace klrl
