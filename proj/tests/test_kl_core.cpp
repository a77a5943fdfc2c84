#include "klrl/instances.hpp"
#include "klrl/kl_core.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

using namespace klrl;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Index>(v.size()));
  Index i = 0;
  for (const double x : v) out(i++) = x;
  return out;
}

Matrix row(std::initializer_list<double> v) { return vec(v).transpose(); }

const double kE = std::exp(1.0);

}  // namespace

TEST_SUITE("kl_core") {

TEST_CASE("log_partition examples") {
  CHECK(log_partition(vec({0.3, 0.3, 0.3}), 2.0, vec({0.2, 0.5, 0.3})) == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(log_partition(vec({0.4, 0.9}), 3.0, vec({1.0, 0.0})) == doctest::Approx(1.2).epsilon(1e-15));
  const double expected = static_cast<double>(oracle::log_partition({0, 1}, 1, {0.5, 0.5}));
  CHECK(std::abs(log_partition(vec({0.0, 1.0}), 1.0, vec({0.5, 0.5})) - expected) < 1e-15);
  CHECK(std::abs(expected - std::log((1 + kE) / 2)) < 1e-15);
}

TEST_CASE("log_partition rejects non-finite scores and bad eta") {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const double inf = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(log_partition(vec({0.0, nan}), 1.0, vec({0.5, 0.5})), InvalidInput);
  CHECK_THROWS_AS(log_partition(vec({0.0, inf}), 1.0, vec({0.5, 0.5})), InvalidInput);
  CHECK_THROWS_AS(log_partition(vec({0.0, 1.0}), 0.0, vec({0.5, 0.5})), InvalidInput);
  CHECK_THROWS_AS(log_partition(vec({0.0, 1.0}), -1.0, vec({0.5, 0.5})), InvalidInput);
  CHECK_THROWS_AS(log_partition(vec({0.0, 1.0}), 1.0, vec({0.5, 0.3, 0.2})), InvalidInput);
}

TEST_CASE("log_partition stays finite where exp overflows") {
  const double z = log_partition(vec({1.0, 0.0}), 1000.0, vec({0.5, 0.5}));
  CHECK(std::isfinite(z));
  CHECK(z == doctest::Approx(1000.0 + std::log(0.5)));
}

TEST_CASE("gibbs_distribution examples") {
  const Vector u = gibbs_distribution(vec({0.0, 0.0}), 1.0, vec({0.5, 0.5}));
  CHECK(u(0) == 0.5);
  CHECK(u(1) == 0.5);
  const Vector b = gibbs_distribution(vec({0.5, 0.5}), 2.0, vec({0.9, 0.1}));
  CHECK(std::abs(b(0) - 0.9) < 1e-15);
  CHECK(std::abs(b(1) - 0.1) < 1e-15);
  const Vector g = gibbs_distribution(vec({0.0, 1.0}), 1.0, vec({0.5, 0.5}));
  CHECK(std::abs(g(0) - 1 / (1 + kE)) < 1e-15);
  CHECK(std::abs(g(1) - kE / (1 + kE)) < 1e-15);
}

TEST_CASE("gibbs_distribution is a distribution with the tilted argmax") {
  Rng rng(11);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 500; ++trial) {
    const Index n = 2 + static_cast<Index>(trial % 7);
    const double eta = 0.5 + 7.5 * unit(rng);
    Vector score(n);
    for (Index a = 0; a < n; ++a) score(a) = unit(rng);
    const Vector base = random_full_support_distribution(rng, n);
    const Vector pi = gibbs_distribution(score, eta, base);
    REQUIRE(is_distribution(pi, 1e-12));
    Index arg_tilted = 0;
    Index arg_pi = 0;
    for (Index a = 1; a < n; ++a) {
      if (base(a) * std::exp(eta * score(a)) > base(arg_tilted) * std::exp(eta * score(arg_tilted))) arg_tilted = a;
      if (pi(a) > pi(arg_pi)) arg_pi = a;
    }
    CHECK(arg_tilted == arg_pi);
    const auto ref = oracle::gibbs(oracle::to_ld(score), eta, oracle::to_ld(base));
    for (Index a = 0; a < n; ++a) CHECK(std::abs(pi(a) - static_cast<double>(ref[static_cast<size_t>(a)])) < 1e-13);
  }
}

TEST_CASE("gibbs_distribution keeps zero base mass at zero") {
  const Vector pi = gibbs_distribution(vec({5.0, 0.0, 1.0}), 2.0, vec({0.0, 0.5, 0.5}));
  CHECK(pi(0) == 0.0);
  CHECK(is_distribution(pi));
}

TEST_CASE("kl_divergence examples") {
  CHECK(kl_divergence(vec({0.3, 0.7}), vec({0.3, 0.7})) == 0.0);
  CHECK(std::abs(kl_divergence(vec({1.0, 0.0}), vec({0.5, 0.5})) - std::log(2.0)) < 1e-15);
  CHECK(std::isinf(kl_divergence(vec({0.5, 0.5}), vec({1.0, 0.0}))));
  CHECK_THROWS_AS(kl_divergence(vec({0.5, 0.5}), vec({1.0, 0.0, 0.0})), InvalidInput);
}

TEST_CASE("objective examples") {
  RewardTable r(2, 3);
  r << 0.1, 0.5, 0.9, 0.3, 0.2, 0.7;
  PolicyTable ref(2, 3);
  ref << 0.2, 0.3, 0.5, 0.6, 0.3, 0.1;
  const Vector d0 = vec({0.4, 0.6});
  const double plain = 0.4 * ref.row(0).dot(r.row(0)) + 0.6 * ref.row(1).dot(r.row(1));
  CHECK(std::abs(objective(ref, r, 2.0, ref, d0) - plain) < 1e-15);

  CHECK(objective(PolicyTable::Ones(1, 1), RewardTable::Constant(1, 1, 0.7), 3.0,
                  PolicyTable::Ones(1, 1), Vector::Ones(1)) == doctest::Approx(0.7).epsilon(1e-15));

  const PolicyTable star = gibbs_policy(r, 2.0, ref);
  CHECK(std::abs(objective(star, r, 2.0, ref, d0) - optimal_objective(r, 2.0, ref, d0)) < 1e-9);
}

TEST_CASE("objective flags support violations") {
  PolicyTable ref(1, 2);
  ref << 1.0, 0.0;
  PolicyTable pi(1, 2);
  pi << 0.5, 0.5;
  const double j = objective(pi, RewardTable::Constant(1, 2, 0.5), 1.0, ref, Vector::Ones(1));
  CHECK(std::isinf(j));
  CHECK(j < 0);
}

TEST_CASE("optimal_objective examples") {
  PolicyTable ref(2, 3);
  ref << 0.2, 0.3, 0.5, 0.6, 0.3, 0.1;
  CHECK(optimal_objective(RewardTable::Constant(2, 3, 0.42), 1.7, ref, vec({0.5, 0.5})) ==
        doctest::Approx(0.42).epsilon(1e-14));

  const double v = optimal_objective(row({0.0, 1.0}), 1.0, row({0.5, 0.5}), Vector::Ones(1));
  CHECK(std::abs(v - 0.6201) < 1e-4);
  const auto exact = oracle::log_partition({0, 1}, 1, {0.5, 0.5});
  CHECK(std::abs(v - static_cast<double>(exact)) < 1e-15);
  const auto grid = oracle::grid_search_two_actions({0, 1}, 1, {0.5, 0.5}, 1e-4L);
  CHECK(v >= static_cast<double>(grid) - 1e-12);
  CHECK(v - static_cast<double>(grid) < 1e-7);
}

TEST_CASE("Gibbs policy dominates random policies and matches the grid oracle") {
  Rng rng(23);
  for (int trial = 0; trial < 30; ++trial) {
    const BanditInstance inst = random_bandit(rng, 1 + trial % 4, 2 + trial % 5);
    const double best = inst.optimal_value();
    for (int k = 0; k < 200; ++k) {
      PolicyTable pi(inst.contexts(), inst.actions());
      for (Index x = 0; x < inst.contexts(); ++x) pi.row(x) = random_distribution(rng, inst.actions()).transpose();
      CHECK(best >= objective(pi, inst.reward, inst.eta, inst.reference, inst.d0) - 1e-9);
    }
  }
  for (int trial = 0; trial < 20; ++trial) {
    const BanditInstance inst = random_bandit(rng, 1, 2);
    const auto grid = oracle::grid_search_two_actions(oracle::to_ld(inst.reward.row(0).transpose()), inst.eta,
                                                      oracle::to_ld(inst.reference.row(0).transpose()), 1e-4L);
    // Grid spacing 1e-4 bounds the shortfall by the objective's curvature times spacing².
    CHECK(inst.optimal_value() >= static_cast<double>(grid) - 1e-12);
    CHECK(inst.optimal_value() - static_cast<double>(grid) < 1e-6);
  }
}

TEST_CASE("soft_value examples and monotonicity") {
  CHECK(soft_value(vec({0.25, 0.25, 0.25}), 4.0, vec({0.1, 0.2, 0.7})) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(soft_value(vec({0.25, 0.8}), 4.0, vec({0.0, 1.0})) == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(std::abs(soft_value(vec({0.0, 1.0}), 1.0, vec({0.5, 0.5})) - std::log((1 + kE) / 2)) < 1e-15);

  Rng rng(5);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 300; ++trial) {
    const Index n = 2 + trial % 5;
    const double eta = 0.5 + 7.5 * unit(rng);
    Vector q(n);
    Vector q2(n);
    for (Index a = 0; a < n; ++a) {
      q(a) = unit(rng);
      q2(a) = q(a) + 0.3 * unit(rng);
    }
    const Vector base = random_full_support_distribution(rng, n);
    CHECK(soft_value(q, eta, base) <= soft_value(q2, eta, base) + 1e-15);
  }
}

TEST_CASE("delta_value examples") {
  const Vector ref = vec({0.3, 0.7});
  const Vector r = vec({0.2, 0.6});
  CHECK(std::abs(delta_value(r, r, 2.0, ref) + log_partition(r, 2.0, ref) / 2.0) < 1e-15);
  const double d = delta_value(vec({0.0, 1.0}), vec({0.0, 0.0}), 1.0, vec({0.5, 0.5}));
  CHECK(std::abs(d - (-std::log((1 + kE) / 2) + kE / (1 + kE))) < 1e-15);
  CHECK(std::abs(d - 0.1109) < 1e-4);
}

TEST_CASE("delta difference equals the suboptimality gap") {
  Rng rng(31);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const BanditInstance inst = random_bandit(rng, 1 + trial % 4, 2 + trial % 5);
    RewardTable opt = inst.reward;
    for (Index x = 0; x < opt.rows(); ++x) {
      for (Index a = 0; a < opt.cols(); ++a) opt(x, a) += unit(rng);
    }
    const PolicyTable pi = gibbs_policy(opt, inst.eta, inst.reference);
    const double gap = inst.optimal_value() - objective(pi, inst.reward, inst.eta, inst.reference, inst.d0);
    double via_delta = 0.0;
    for (Index x = 0; x < opt.rows(); ++x) {
      via_delta += inst.d0(x) * (delta_value(opt.row(x), inst.reward.row(x), inst.eta, inst.reference.row(x)) -
                                 delta_value(inst.reward.row(x), inst.reward.row(x), inst.eta, inst.reference.row(x)));
    }
    CHECK(std::abs(gap - via_delta) < 1e-9);
    CHECK(gap >= -1e-12);
  }
}

TEST_CASE("delta_gradient examples and finite differences") {
  const Vector ref = vec({0.2, 0.5, 0.3});
  const Vector r = vec({0.1, 0.4, 0.9});
  CHECK(delta_gradient(r, r, 3.0, ref).cwiseAbs().maxCoeff() == 0.0);

  Rng rng(41);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const Index n = 3;
    const double eta = 0.5 + 7.5 * unit(rng);
    Vector rr(n);
    Vector rs(n);
    for (Index a = 0; a < n; ++a) {
      rr(a) = unit(rng);
      rs(a) = unit(rng);
    }
    const Vector base = random_full_support_distribution(rng, n);
    const Vector g = delta_gradient(rr, rs, eta, base);
    CHECK(std::abs(g.sum()) < 1e-12);
    const auto f = [&](const Vector& v) { return delta_value(v, rs, eta, base); };
    Vector fd(n);
    for (Index a = 0; a < n; ++a) fd(a) = oracle::central_difference(f, rr, a, 1e-6);
    const double denom = std::max({g.cwiseAbs().maxCoeff(), fd.cwiseAbs().maxCoeff(), 1e-3});
    CHECK((g - fd).cwiseAbs().maxCoeff() / denom < 1e-5);
  }
}

TEST_CASE("table forms and GibbsPolicy agree with row forms") {
  Rng rng(3);
  const BanditInstance inst = random_bandit(rng, 3, 4);
  const GibbsPolicy gp{inst.reference, inst.reward, inst.eta};
  const PolicyTable t = gp.table();
  CHECK(rows_are_distributions(t));
  for (Index x = 0; x < 3; ++x) CHECK((gp.at(x).transpose() - t.row(x)).cwiseAbs().maxCoeff() == 0.0);
}

}  // TEST_SUITE
