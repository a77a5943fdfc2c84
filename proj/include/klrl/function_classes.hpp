#pragma once

// Reward / value function classes, least-squares fitting, confidence sets and
// the class-relative uncertainty that drives the exploration bonus.
//
// Two class families are supported:
//   * FiniteFunctionClass: an ordered list of tables over (context, action).
//   * LinearFunctionClass: θᵀφ(x,a) with ‖φ‖₂ ≤ 1, evaluated clipped to [0,1].
//
// The free functions recompute everything from a Dataset and are the reference
// path. FiniteLearner / LinearLearner keep incremental sufficient statistics
// (pairwise history sums, rank-one inverse updates) for the online algorithms.

#include "klrl/types.hpp"

#include <Eigen/Core>

#include <span>
#include <variant>
#include <vector>

namespace klrl {

struct Record {
  Index context = 0;
  Index action = 0;
  double target = 0.0;
};

/// Observations in acquisition order.
using Dataset = std::vector<Record>;

class FiniteFunctionClass {
 public:
  /// Members must share one shape and take values in [0, 1].
  explicit FiniteFunctionClass(std::vector<RewardTable> members);

  Index size() const { return static_cast<Index>(members_.size()); }
  Index contexts() const { return members_.front().rows(); }
  Index actions() const { return members_.front().cols(); }
  const RewardTable& member(Index i) const { return members_.at(static_cast<size_t>(i)); }
  double value(Index i, Index x, Index a) const { return member(i)(x, a); }

  /// Index of the first member equal to `table` within `tol`, or -1.
  Index find(const RewardTable& table, double tol = 1e-9) const;

 private:
  std::vector<RewardTable> members_;
};

class LinearFunctionClass {
 public:
  /// `features` has one row per cell, row index x·actions + a. Rows are scaled
  /// uniformly so that the largest feature norm is at most 1. `cardinality`
  /// stands in for N in the confidence radius.
  LinearFunctionClass(Matrix features, Index contexts, Index actions, double norm_bound,
                      double cardinality = 1.0);

  /// φ(x,a) = e_{x·A+a}; represents every table over the grid.
  static LinearFunctionClass one_hot(Index contexts, Index actions, double norm_bound,
                                     double cardinality = 1.0);

  Index dim() const { return features_.cols(); }
  Index contexts() const { return contexts_; }
  Index actions() const { return actions_; }
  double norm_bound() const { return norm_bound_; }
  double cardinality() const { return cardinality_; }
  double feature_scale() const { return feature_scale_; }

  Index cell(Index x, Index a) const { return x * actions_ + a; }
  auto feature(Index x, Index a) const { return features_.row(cell(x, a)); }
  const Matrix& features() const { return features_; }

  /// θᵀφ(x,a) clipped to [0, 1].
  double value(const Vector& theta, Index x, Index a) const;
  RewardTable table(const Vector& theta) const;

 private:
  Matrix features_;
  Index contexts_;
  Index actions_;
  double norm_bound_;
  double cardinality_;
  double feature_scale_ = 1.0;
};

struct FiniteConfidenceSet {
  std::vector<Index> members;
};

/// Ellipsoid {θ : ‖θ − center‖_Σ ≤ β}; Σ = Σφφᵀ + (λ/B)·I.
struct LinearConfidenceSet {
  Vector center;
  Matrix covariance;
  double beta = 0.0;
  double lambda = 1.0;
};

using ConfidenceSet = std::variant<FiniteConfidenceSet, LinearConfidenceSet>;

// --- least squares ---------------------------------------------------------

/// Member minimizing Σᵢ(R(xᵢ,aᵢ) − yᵢ)²; ties go to the lowest index. Empty data → 0.
Index erm_fit(const FiniteFunctionClass& cls, const Dataset& data);

/// Ridge solution (Σφφᵀ + (λ/B)·I)⁻¹ Σφ·y. Empty data → zero vector.
Vector erm_fit(const LinearFunctionClass& cls, const Dataset& data, double lambda);

/// Σᵢ (R_i − R_j)² over the history cells.
double history_distance(const FiniteFunctionClass& cls, Index i, Index j, const Dataset& data);

// --- confidence sets --------------------------------------------------------

/// Members with Σᵢ(R − R̂)² + λ ≤ β². Throws ConfigError when β² < λ.
FiniteConfidenceSet confidence_set(const FiniteFunctionClass& cls, Index erm, const Dataset& data,
                                   double beta, double lambda);

LinearConfidenceSet confidence_set(const LinearFunctionClass& cls, const Vector& erm,
                                   const Dataset& data, double beta, double lambda);

/// Σφφᵀ + (λ/B)·I over the history.
Matrix covariance(const LinearFunctionClass& cls, const Dataset& data, double lambda);

// --- uncertainty and bonus ---------------------------------------------------

/// sup over ordered pairs in the set of |R₁ − R₂|(x,a) / sqrt(λ + Σᵢ(R₁ − R₂)²).
double uncertainty(const FiniteFunctionClass& cls, const FiniteConfidenceSet& set, Index x,
                   Index a, const Dataset& data, double lambda);

/// ‖φ(x,a)‖_{Σ⁻¹}, the Cauchy–Schwarz upper bound used as the operational value.
double uncertainty(const LinearFunctionClass& cls, const LinearConfidenceSet& set, Index x,
                   Index a);

/// min{1, β·U}.
inline double bonus_from_uncertainty(double beta, double u) {
  const double b = beta * u;
  return b < 1.0 ? b : 1.0;
}

double bonus(const FiniteFunctionClass& cls, const FiniteConfidenceSet& set, Index x, Index a,
             const Dataset& data, double lambda, double beta);
double bonus(const LinearFunctionClass& cls, const LinearConfidenceSet& set, Index x, Index a,
             double beta);

/// Running Σ_t min(1, U_t²) along a played trajectory.
class EluderSum {
 public:
  double add(double u);
  double value() const { return total_; }

 private:
  double total_ = 0.0;
};

std::vector<double> eluder_sum(std::span<const double> uncertainties);

// --- confidence radius --------------------------------------------------------

enum class BetaVariant { bandit, mdp };

/// bandit: 4·sqrt(log(N·T/δ));  mdp: 4·sqrt(log(4·N·T·H/δ)); both times `scale`.
double beta_schedule(double cardinality, Index horizon_t, Index horizon_h, double delta,
                     BetaVariant variant, double scale = 1.0);

// --- incremental learners ---------------------------------------------------

/// Pairwise history sums S(i,j) = Σᵢ(R_i − R_j)² and per-member squared loss,
/// both updated in O(N²) per record.
class FiniteLearner {
 public:
  FiniteLearner(const FiniteFunctionClass& cls, double lambda);

  /// Records a cell for the uncertainty denominator only.
  void add_point(Index x, Index a);
  /// Records a cell and its target for the tracked squared loss.
  void add_observation(Index x, Index a, double target);

  /// ERM over the tracked losses (lowest index on ties).
  Index erm() const;
  /// Members with S(i, center) + λ ≤ β². Empty when β² < λ.
  std::vector<Index> confidence_members(Index center, double beta) const;
  std::vector<Index> all_members() const;

  double uncertainty(std::span<const Index> members, Index x, Index a) const;
  RewardTable uncertainty_table(std::span<const Index> members) const;

  double pair_sum(Index i, Index j) const { return pair_sums_(i, j); }
  const Vector& losses() const { return losses_; }
  Index history_size() const { return count_; }
  const FiniteFunctionClass& function_class() const { return *cls_; }

 private:
  const FiniteFunctionClass* cls_;
  double lambda_;
  Matrix pair_sums_;
  Vector losses_;
  Index count_ = 0;
};

/// Covariance Σ = Σφφᵀ + (λ/B)·I with Σ⁻¹ kept by Sherman–Morrison updates and
/// refreshed by a full inversion every `refresh_period` records.
class LinearLearner {
 public:
  LinearLearner(const LinearFunctionClass& cls, double lambda, Index refresh_period = 512);

  void add_point(Index x, Index a);
  void add_observation(Index x, Index a, double target);

  /// Ridge estimate from the tracked Σφ·y.
  Vector theta() const { return inverse_ * response_; }
  /// Σ⁻¹·rhs, for callers that assemble their own regression targets.
  Vector solve(const Vector& rhs) const { return inverse_ * rhs; }

  double uncertainty(Index x, Index a) const;
  RewardTable uncertainty_table() const;

  const Matrix& covariance() const { return covariance_; }
  const Matrix& inverse() const { return inverse_; }
  Index history_size() const { return count_; }
  const LinearFunctionClass& function_class() const { return *cls_; }

 private:
  void refresh();

  const LinearFunctionClass* cls_;
  double lambda_;
  Index refresh_period_;
  Matrix covariance_;
  Matrix inverse_;
  Vector response_;
  Index count_ = 0;
  Index since_refresh_ = 0;
};

using FunctionClass = std::variant<FiniteFunctionClass, LinearFunctionClass>;

/// N for finite classes, the configured stand-in for linear ones.
double class_cardinality(const FunctionClass& cls);

}  // namespace klrl
