#pragma once

// KL-regularized objective arithmetic over finite action sets.
//
// Rows of a RewardTable / PolicyTable are indexed by context (or state), columns
// by action. The row-level functions accept any Eigen dense expression so that
// callers can pass `table.row(x)`, a column vector, or an intermediate sum such
// as `r_hat.row(x) + bonus.row(x)` without materializing a temporary.

#include "klrl/types.hpp"

#include <Eigen/Core>

#include <cmath>
#include <limits>
#include <string>

namespace klrl {

namespace detail {

template <typename Scalar>
void require_eta(Scalar eta) {
  if (!(eta > Scalar(0)) || !std::isfinite(static_cast<double>(eta))) {
    throw InvalidInput("eta must be a positive finite real");
  }
}

template <typename DerivedA, typename DerivedB>
void require_same_size(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b,
                       const char* what) {
  if (a.size() != b.size()) {
    throw InvalidInput(std::string(what) + ": dimension mismatch (" + std::to_string(a.size()) +
                       " vs " + std::to_string(b.size()) + ")");
  }
}

}  // namespace detail

/// True when all weights are >= 0 and they sum to 1 within `tol`.
template <typename Derived>
bool is_distribution(const Eigen::MatrixBase<Derived>& w, double tol = 1e-9) {
  using Scalar = typename Derived::Scalar;
  if (w.size() == 0) return false;
  Scalar total(0);
  for (Index i = 0; i < w.size(); ++i) {
    const Scalar v = w.derived().coeff(i);
    if (!(v >= Scalar(0)) || !std::isfinite(static_cast<double>(v))) return false;
    total += v;
  }
  return std::abs(static_cast<double>(total) - 1.0) <= tol;
}

template <typename Derived>
void require_distribution(const Eigen::MatrixBase<Derived>& w, const std::string& what) {
  if (!is_distribution(w)) throw InvalidInput(what + " is not a probability distribution");
}

/// True when every row of `table` is a distribution.
template <typename Derived>
bool rows_are_distributions(const Eigen::MatrixBase<Derived>& table, double tol = 1e-9) {
  for (Index r = 0; r < table.rows(); ++r) {
    if (!is_distribution(table.row(r), tol)) return false;
  }
  return table.rows() > 0;
}

/// log Σ_a base(a)·exp(η·score(a)), evaluated with max-subtraction. Actions
/// with zero base mass do not contribute.
template <typename DerivedS, typename DerivedB>
typename DerivedS::Scalar log_partition(const Eigen::MatrixBase<DerivedS>& score,
                                        typename DerivedS::Scalar eta,
                                        const Eigen::MatrixBase<DerivedB>& base) {
  using Scalar = typename DerivedS::Scalar;
  detail::require_eta(eta);
  detail::require_same_size(score, base, "log_partition");

  Scalar shift = -std::numeric_limits<Scalar>::infinity();
  for (Index a = 0; a < score.size(); ++a) {
    const Scalar s = score.derived().coeff(a);
    if (!std::isfinite(static_cast<double>(s))) {
      throw InvalidInput("log_partition: non-finite score at action " + std::to_string(a));
    }
    const Scalar b = static_cast<Scalar>(base.derived().coeff(a));
    if (b < Scalar(0)) throw InvalidInput("log_partition: negative base weight");
    if (b > Scalar(0) && eta * s > shift) shift = eta * s;
  }
  if (!std::isfinite(static_cast<double>(shift))) {
    throw InvalidInput("log_partition: base distribution has no mass");
  }

  Scalar total(0);
  for (Index a = 0; a < score.size(); ++a) {
    const Scalar b = static_cast<Scalar>(base.derived().coeff(a));
    if (b > Scalar(0)) total += b * std::exp(eta * score.derived().coeff(a) - shift);
  }
  return shift + std::log(total);
}

/// π(a) ∝ base(a)·exp(η·score(a)); zero wherever base is zero.
template <typename DerivedS, typename DerivedB>
Eigen::Matrix<typename DerivedS::Scalar, Eigen::Dynamic, 1> gibbs_distribution(
    const Eigen::MatrixBase<DerivedS>& score, typename DerivedS::Scalar eta,
    const Eigen::MatrixBase<DerivedB>& base) {
  using Scalar = typename DerivedS::Scalar;
  const Scalar log_z = log_partition(score, eta, base);
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out(score.size());
  for (Index a = 0; a < score.size(); ++a) {
    const Scalar b = static_cast<Scalar>(base.derived().coeff(a));
    out(a) = b > Scalar(0) ? b * std::exp(eta * score.derived().coeff(a) - log_z) : Scalar(0);
  }
  // Renormalize away the rounding left by exp/log.
  out /= out.sum();
  return out;
}

/// KL(p‖q) with 0·log(0/·) = 0. Returns +infinity when p(a) > 0 = q(a).
template <typename DerivedP, typename DerivedQ>
typename DerivedP::Scalar kl_divergence(const Eigen::MatrixBase<DerivedP>& p,
                                        const Eigen::MatrixBase<DerivedQ>& q) {
  using Scalar = typename DerivedP::Scalar;
  detail::require_same_size(p, q, "kl_divergence");
  Scalar total(0);
  for (Index a = 0; a < p.size(); ++a) {
    const Scalar pa = p.derived().coeff(a);
    const Scalar qa = static_cast<Scalar>(q.derived().coeff(a));
    if (pa <= Scalar(0)) continue;
    if (qa <= Scalar(0)) return std::numeric_limits<Scalar>::infinity();
    total += pa * std::log(pa / qa);
  }
  // Rounding can push an exact zero slightly negative.
  return total < Scalar(0) ? Scalar(0) : total;
}

/// (1/η)·log E_{a∼base} exp(η·Q(a)); the single-step regularized optimum.
template <typename DerivedQ, typename DerivedB>
typename DerivedQ::Scalar soft_value(const Eigen::MatrixBase<DerivedQ>& q,
                                     typename DerivedQ::Scalar eta,
                                     const Eigen::MatrixBase<DerivedB>& base) {
  return log_partition(q, eta, base) / eta;
}

/// Δ(x,R) = −(1/η)·log Z_R(x) + E_{π_R}[R − R*] for one context row.
template <typename DerivedR, typename DerivedStar, typename DerivedB>
typename DerivedR::Scalar delta_value(const Eigen::MatrixBase<DerivedR>& reward,
                                      const Eigen::MatrixBase<DerivedStar>& reward_star,
                                      typename DerivedR::Scalar eta,
                                      const Eigen::MatrixBase<DerivedB>& base) {
  using Scalar = typename DerivedR::Scalar;
  detail::require_same_size(reward, reward_star, "delta_value");
  const auto pi = gibbs_distribution(reward, eta, base);
  Scalar expected_gap(0);
  for (Index a = 0; a < reward.size(); ++a) {
    expected_gap += pi(a) * (reward.derived().coeff(a) - reward_star.derived().coeff(a));
  }
  return -log_partition(reward, eta, base) / eta + expected_gap;
}

/// Partial derivatives of Δ(x,·) with respect to R(x,a) for every action a:
///   η·π(a)·(R−R*)(a) − η·π(a)·Σ_{a'} π(a')·(R−R*)(a').
template <typename DerivedR, typename DerivedStar, typename DerivedB>
Eigen::Matrix<typename DerivedR::Scalar, Eigen::Dynamic, 1> delta_gradient(
    const Eigen::MatrixBase<DerivedR>& reward, const Eigen::MatrixBase<DerivedStar>& reward_star,
    typename DerivedR::Scalar eta, const Eigen::MatrixBase<DerivedB>& base) {
  using Scalar = typename DerivedR::Scalar;
  detail::require_same_size(reward, reward_star, "delta_gradient");
  const auto pi = gibbs_distribution(reward, eta, base);
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> diff(reward.size());
  for (Index a = 0; a < reward.size(); ++a) {
    diff(a) = reward.derived().coeff(a) - reward_star.derived().coeff(a);
  }
  const Scalar mean = pi.dot(diff);
  return (eta * pi.array() * (diff.array() - mean)).matrix();
}

// ---------------------------------------------------------------------------
// Table-level forms: one row per context.

/// Gibbs policy table: row x is gibbs_distribution(score.row(x), η, base.row(x)).
template <typename DerivedS, typename DerivedB>
Eigen::Matrix<typename DerivedS::Scalar, Eigen::Dynamic, Eigen::Dynamic> gibbs_policy(
    const Eigen::MatrixBase<DerivedS>& score, typename DerivedS::Scalar eta,
    const Eigen::MatrixBase<DerivedB>& base) {
  if (score.rows() != base.rows() || score.cols() != base.cols()) {
    throw InvalidInput("gibbs_policy: score and base shapes differ");
  }
  Eigen::Matrix<typename DerivedS::Scalar, Eigen::Dynamic, Eigen::Dynamic> out(score.rows(),
                                                                                 score.cols());
  for (Index x = 0; x < score.rows(); ++x) {
    out.row(x) = gibbs_distribution(score.row(x), eta, base.row(x)).transpose();
  }
  return out;
}

/// J(π) = Σ_x d0(x)·[E_{π(·|x)} R*(x,·) − (1/η)·KL(π(·|x)‖π_ref(·|x))].
/// Returns −infinity when π leaves the support of π_ref at a context with
/// positive d0 mass; callers treat that value as the support-violation flag.
inline double objective(const PolicyTable& pi, const RewardTable& reward_star, double eta,
                        const PolicyTable& pi_ref, const Vector& d0) {
  detail::require_eta(eta);
  if (pi.rows() != reward_star.rows() || pi.cols() != reward_star.cols() ||
      pi_ref.rows() != pi.rows() || pi_ref.cols() != pi.cols() || d0.size() != pi.rows()) {
    throw InvalidInput("objective: shape mismatch");
  }
  double total = 0.0;
  for (Index x = 0; x < pi.rows(); ++x) {
    if (d0(x) <= 0.0) continue;
    const double kl = kl_divergence(pi.row(x), pi_ref.row(x));
    if (std::isinf(kl)) return -std::numeric_limits<double>::infinity();
    total += d0(x) * (pi.row(x).dot(reward_star.row(x)) - kl / eta);
  }
  return total;
}

/// max_π J(π) = Σ_x d0(x)·(1/η)·log Z_{R*}(x).
inline double optimal_objective(const RewardTable& reward_star, double eta,
                                const PolicyTable& pi_ref, const Vector& d0) {
  if (pi_ref.rows() != reward_star.rows() || pi_ref.cols() != reward_star.cols() ||
      d0.size() != reward_star.rows()) {
    throw InvalidInput("optimal_objective: shape mismatch");
  }
  double total = 0.0;
  for (Index x = 0; x < reward_star.rows(); ++x) {
    if (d0(x) <= 0.0) continue;
    total += d0(x) * soft_value(reward_star.row(x), eta, pi_ref.row(x));
  }
  return total;
}

/// A reference policy tilted by an η-scaled score; rows materialize lazily.
struct GibbsPolicy {
  PolicyTable base;
  RewardTable score;
  double eta = 1.0;

  Vector at(Index x) const { return gibbs_distribution(score.row(x), eta, base.row(x)); }
  PolicyTable table() const { return gibbs_policy(score, eta, base); }
};

}  // namespace klrl
