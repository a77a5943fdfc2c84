#include "klrl/function_classes.hpp"
#include "klrl/instances.hpp"
#include "klrl/theory_checks.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace klrl;

namespace {

RewardTable cells(Index rows, Index cols, std::initializer_list<double> v) {
  RewardTable t(rows, cols);
  Index i = 0;
  for (const double x : v) t(i / cols, i % cols) = x, ++i;
  return t;
}

// Two 1×2 members that differ by 1 at (0, 0) only.
FiniteFunctionClass unit_pair() {
  return FiniteFunctionClass({cells(1, 2, {0.0, 0.5}), cells(1, 2, {1.0, 0.5})});
}

Dataset noiseless(const RewardTable& truth, Rng& rng, Index n) {
  std::uniform_int_distribution<Index> x(0, truth.rows() - 1);
  std::uniform_int_distribution<Index> a(0, truth.cols() - 1);
  Dataset d;
  for (Index i = 0; i < n; ++i) {
    const Index xi = x(rng);
    const Index ai = a(rng);
    d.push_back({xi, ai, truth(xi, ai)});
  }
  return d;
}

}  // namespace

TEST_SUITE("function_classes") {

TEST_CASE("finite class rejects malformed members") {
  CHECK_THROWS_AS(FiniteFunctionClass({}), InvalidInput);
  CHECK_THROWS_AS(FiniteFunctionClass({cells(1, 2, {0.0, 0.5}), cells(2, 1, {0.0, 0.5})}), InvalidInput);
  CHECK_THROWS_AS(FiniteFunctionClass({cells(1, 2, {0.0, 1.5})}), InvalidInput);
  const FiniteFunctionClass c = unit_pair();
  CHECK(c.find(cells(1, 2, {1.0, 0.5})) == 1);
  CHECK(c.find(cells(1, 2, {0.3, 0.5})) == -1);
}

TEST_CASE("erm_fit finite examples") {
  Rng rng(2);
  const RewardTable truth = cells(2, 3, {0.1, 0.4, 0.7, 0.9, 0.2, 0.5});
  const FiniteFunctionClass cls = random_finite_class(rng, truth, 6, 4);
  CHECK(erm_fit(cls, noiseless(truth, rng, 50)) == 4);
  CHECK(erm_fit(cls, Dataset{}) == 0);
  // Identical members tie; the lowest index wins.
  const FiniteFunctionClass twins({truth, truth});
  CHECK(erm_fit(twins, noiseless(truth, rng, 5)) == 0);
}

TEST_CASE("erm_fit linear recovers theta against a dense oracle solve") {
  Rng rng(17);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const Index d = 4;
  Matrix feats(6, d);
  for (Index i = 0; i < 6; ++i) {
    for (Index j = 0; j < d; ++j) feats(i, j) = gauss(rng);
  }
  const LinearFunctionClass cls(feats, 2, 3, 5.0);
  Vector theta(d);
  theta << 0.2, -0.1, 0.05, 0.3;
  Dataset data;
  for (Index x = 0; x < 2; ++x) {
    for (Index a = 0; a < 3; ++a) data.push_back({x, a, cls.feature(x, a).dot(theta)});
  }
  const double lambda = 1e-9;
  CHECK(erm_fit(cls, Dataset{}, 1.0).isZero(0.0));
  const Vector fit = erm_fit(cls, data, lambda);

  const Matrix cov = covariance(cls, data, lambda);
  std::vector<std::vector<long double>> a(d, std::vector<long double>(d));
  std::vector<long double> b(d, 0.0L);
  for (Index i = 0; i < d; ++i) {
    for (Index j = 0; j < d; ++j) a[i][j] = cov(i, j);
  }
  for (const Record& r : data) {
    for (Index i = 0; i < d; ++i) b[i] += static_cast<long double>(cls.feature(r.context, r.action)(i)) * r.target;
  }
  const auto ref = oracle::dense_solve(a, b);
  for (Index i = 0; i < d; ++i) {
    CHECK(std::abs(fit(i) - static_cast<double>(ref[i])) < 1e-7);
    CHECK(std::abs(fit(i) - theta(i)) < 1e-6);
  }
}

TEST_CASE("confidence_set examples") {
  Rng rng(9);
  const RewardTable truth = cells(2, 2, {0.1, 0.8, 0.6, 0.3});
  const FiniteFunctionClass cls = random_finite_class(rng, truth, 8, 3);
  const Dataset data = noiseless(truth, rng, 30);
  const Index erm = erm_fit(cls, data);
  CHECK(confidence_set(cls, erm, data, 1e6, 1.0).members.size() == 8);
  for (const double beta : {1.0, 1.5, 3.0, 10.0}) {
    const auto set = confidence_set(cls, erm, data, beta, 1.0).members;
    CHECK(std::find(set.begin(), set.end(), 3) != set.end());
  }
  CHECK_THROWS_AS(confidence_set(cls, erm, data, 0.5, 1.0), ConfigError);

  const FiniteFunctionClass pair = unit_pair();
  const Dataset one{{0, 0, 1.0}};
  const auto set = confidence_set(pair, erm_fit(pair, one), one, std::sqrt(1.5), 1.0).members;
  CHECK(set == std::vector<Index>{1});
}

TEST_CASE("confidence sets grow with beta") {
  Rng rng(12);
  const RewardTable truth = cells(1, 3, {0.2, 0.5, 0.9});
  const FiniteFunctionClass cls = random_finite_class(rng, truth, 10, 0);
  const Dataset data = noiseless(truth, rng, 12);
  const Index erm = erm_fit(cls, data);
  std::vector<Index> prev;
  for (double beta = 1.0; beta < 6.0; beta += 0.25) {
    const auto set = confidence_set(cls, erm, data, beta, 1.0).members;
    CHECK(std::includes(set.begin(), set.end(), prev.begin(), prev.end()));
    prev = set;
  }
}

TEST_CASE("finite uncertainty examples") {
  const FiniteFunctionClass pair = unit_pair();
  const FiniteConfidenceSet both{{0, 1}};
  const FiniteConfidenceSet single{{1}};
  CHECK(uncertainty(pair, single, 0, 0, Dataset{}, 1.0) == 0.0);
  CHECK(uncertainty(pair, both, 0, 0, Dataset{}, 1.0) == 1.0);
  CHECK(uncertainty(pair, both, 0, 1, Dataset{}, 1.0) == 0.0);
  CHECK(std::abs(uncertainty(pair, both, 0, 0, Dataset{{0, 0, 0.0}}, 1.0) - 1 / std::sqrt(2.0)) < 1e-15);
}

TEST_CASE("finite uncertainty never grows as history is appended") {
  Rng rng(77);
  const RewardTable truth = cells(2, 2, {0.3, 0.6, 0.9, 0.1});
  const FiniteFunctionClass cls = random_finite_class(rng, truth, 7, 2);
  FiniteLearner learner(cls, 1.0);
  const auto all = learner.all_members();
  RewardTable prev = learner.uncertainty_table(all);
  Dataset data;
  std::uniform_int_distribution<Index> cell(0, 1);
  for (int t = 0; t < 200; ++t) {
    const Index x = cell(rng);
    const Index a = cell(rng);
    learner.add_point(x, a);
    data.push_back({x, a, 0.0});
    const RewardTable now = learner.uncertainty_table(all);
    CHECK((now.array() <= prev.array() + 1e-15).all());
    prev = now;
    if (t % 40 == 0) {
      for (Index xi = 0; xi < 2; ++xi) {
        for (Index ai = 0; ai < 2; ++ai) {
          CHECK(std::abs(now(xi, ai) - uncertainty(cls, FiniteConfidenceSet{all}, xi, ai, data, 1.0)) < 1e-12);
        }
      }
    }
  }
}

TEST_CASE("finite learner matches the from-scratch path") {
  Rng rng(5);
  const RewardTable truth = cells(2, 3, {0.1, 0.5, 0.9, 0.2, 0.4, 0.6});
  const FiniteFunctionClass cls = random_finite_class(rng, truth, 9, 5);
  FiniteLearner learner(cls, 1.0);
  Dataset data;
  std::normal_distribution<double> noise(0.0, 0.5);
  std::uniform_int_distribution<Index> xs(0, 1);
  std::uniform_int_distribution<Index> as(0, 2);
  for (int t = 0; t < 150; ++t) {
    const Index x = xs(rng);
    const Index a = as(rng);
    const double y = truth(x, a) + noise(rng);
    learner.add_observation(x, a, y);
    data.push_back({x, a, y});
  }
  CHECK(learner.erm() == erm_fit(cls, data));
  for (Index i = 0; i < cls.size(); ++i) {
    for (Index j = 0; j < cls.size(); ++j) {
      CHECK(std::abs(learner.pair_sum(i, j) - history_distance(cls, i, j, data)) < 1e-10);
    }
  }
  const double beta = 4.0;
  const auto members = learner.confidence_members(learner.erm(), beta);
  CHECK(members == confidence_set(cls, erm_fit(cls, data), data, beta, 1.0).members);
  CHECK(learner.confidence_members(learner.erm(), 0.5).empty());
}

TEST_CASE("linear uncertainty equals the elliptical norm") {
  const LinearFunctionClass cls = LinearFunctionClass::one_hot(2, 2, 2.0);
  const Dataset data{{0, 0, 0.5}, {0, 0, 0.5}, {1, 1, 0.2}};
  const LinearConfidenceSet set = confidence_set(cls, erm_fit(cls, data, 1.0), data, 3.0, 1.0);
  // Σ = diag(2 + 0.5, 0.5, 0.5, 1 + 0.5).
  CHECK(std::abs(uncertainty(cls, set, 0, 0) - 1 / std::sqrt(2.5)) < 1e-15);
  CHECK(std::abs(uncertainty(cls, set, 0, 1) - 1 / std::sqrt(0.5)) < 1e-15);
  CHECK(std::abs(uncertainty(cls, set, 1, 1) - 1 / std::sqrt(1.5)) < 1e-15);
  CHECK(bonus(cls, set, 0, 1, 3.0) == 1.0);
}

TEST_CASE("incremental inverse matches a dense inverse after 1000 updates") {
  Rng rng(101);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix feats(12, 5);
  for (Index i = 0; i < 12; ++i) {
    for (Index j = 0; j < 5; ++j) feats(i, j) = gauss(rng);
  }
  const LinearFunctionClass cls(feats, 3, 4, 3.0);
  LinearLearner learner(cls, 1.0);
  Dataset data;
  std::uniform_int_distribution<Index> xs(0, 2);
  std::uniform_int_distribution<Index> as(0, 3);
  for (int t = 0; t < 1000; ++t) {
    const Index x = xs(rng);
    const Index a = as(rng);
    const double y = gauss(rng);
    learner.add_observation(x, a, y);
    data.push_back({x, a, y});
  }
  const Matrix dense = oracle::dense_inverse(covariance(cls, data, 1.0));
  CHECK((learner.inverse() - dense).cwiseAbs().maxCoeff() < 1e-8);
  for (Index x = 0; x < 3; ++x) {
    for (Index a = 0; a < 4; ++a) {
      const Vector phi = cls.feature(x, a).transpose();
      CHECK(std::abs(learner.uncertainty(x, a) - std::sqrt(phi.dot(dense * phi))) < 1e-8);
    }
  }
  CHECK((learner.theta() - erm_fit(cls, data, 1.0)).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("linear class scales features and clips values") {
  Matrix feats(2, 1);
  feats << 2.0, 1.0;
  const LinearFunctionClass cls(feats, 1, 2, 1.0);
  CHECK(cls.feature_scale() == 0.5);
  Vector theta(1);
  theta << 3.0;
  CHECK(cls.value(theta, 0, 0) == 1.0);
  theta << -1.0;
  CHECK(cls.value(theta, 0, 1) == 0.0);
  CHECK_THROWS_AS(LinearFunctionClass(feats, 1, 2, 0.0), InvalidInput);
}

TEST_CASE("bonus_from_uncertainty examples") {
  CHECK(bonus_from_uncertainty(5.0, 0.0) == 0.0);
  CHECK(bonus_from_uncertainty(2.0, 0.7) == 1.0);
  CHECK(bonus_from_uncertainty(4.0, 1 / std::sqrt(2.0)) == 1.0);
  CHECK(bonus_from_uncertainty(0.5, 0.5) == 0.25);
}

TEST_CASE("eluder sum examples") {
  CHECK(eluder_sum(std::vector<double>{0.0, 0.0, 0.0}).back() == 0.0);
  const auto s = eluder_sum(std::vector<double>{1.0, 1 / std::sqrt(2.0)});
  CHECK(s[0] == 1.0);
  CHECK(std::abs(s[1] - 1.5) < 1e-15);
  EluderSum e;
  e.add(3.0);
  CHECK(e.value() == 1.0);
}

TEST_CASE("beta_schedule examples") {
  const double b = beta_schedule(10, 100, 1, 0.05, BetaVariant::bandit);
  CHECK(std::abs(b - 4 * std::sqrt(std::log(20000.0))) < 1e-12);
  CHECK(std::abs(b - 12.59) < 5e-3);
  CHECK(std::abs(beta_schedule(10, 100, 2, 0.05, BetaVariant::mdp) -
                 4 * std::sqrt(std::log(4.0 * 10 * 100 * 2 / 0.05))) < 1e-12);
  CHECK(beta_schedule(10, 100, 1, 0.05, BetaVariant::bandit, 0.0) == 0.0);
  CHECK_THROWS_AS(beta_schedule(10, 100, 1, 0.0, BetaVariant::bandit), ConfigError);
  CHECK_THROWS_AS(beta_schedule(10, 100, 1, 1.0, BetaVariant::bandit), ConfigError);
}

TEST_CASE("class_cardinality") {
  CHECK(class_cardinality(FunctionClass(unit_pair())) == 2.0);
  CHECK(class_cardinality(FunctionClass(LinearFunctionClass::one_hot(1, 2, 1.0, 7.0))) == 7.0);
}

TEST_CASE("ERM generalization bound holds at the expected frequency") {
  Rng rng(8);
  const RewardTable truth = cells(3, 3, {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9});
  const FiniteFunctionClass cls = random_finite_class(rng, truth, 10, 3);
  const CheckReport r = generalization_check(cls, 3, NoiseSpec::gaussian(0.5), 200, 100, 0.05, 4);
  CHECK(r.pass);
  const CheckReport quiet = generalization_check(cls, 3, NoiseSpec::none(), 20, 100, 0.05, 4);
  CHECK(quiet.max_violation == 0.0);
}

}  // TEST_SUITE
