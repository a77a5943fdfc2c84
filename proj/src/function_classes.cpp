#include "klrl/function_classes.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <string>

namespace klrl {

namespace {

void require_cell(Index x, Index a, Index contexts, Index actions) {
  if (x < 0 || x >= contexts || a < 0 || a >= actions) {
    throw InvalidInput("cell (" + std::to_string(x) + ", " + std::to_string(a) +
                       ") out of range");
  }
}

void require_lambda(double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda must be positive");
}

double clip_unit(double v) { return std::clamp(v, 0.0, 1.0); }

}  // namespace

// --- FiniteFunctionClass ----------------------------------------------------

FiniteFunctionClass::FiniteFunctionClass(std::vector<RewardTable> members)
    : members_(std::move(members)) {
  if (members_.empty()) throw InvalidInput("finite function class needs at least one member");
  const Index rows = members_.front().rows();
  const Index cols = members_.front().cols();
  if (rows == 0 || cols == 0) throw InvalidInput("finite function class members are empty");
  for (size_t i = 0; i < members_.size(); ++i) {
    const RewardTable& m = members_[i];
    if (m.rows() != rows || m.cols() != cols) {
      throw InvalidInput("member " + std::to_string(i) + " has a different shape");
    }
    if (!m.allFinite() || m.minCoeff() < 0.0 || m.maxCoeff() > 1.0) {
      throw InvalidInput("member " + std::to_string(i) + " leaves [0, 1]");
    }
  }
}

Index FiniteFunctionClass::find(const RewardTable& table, double tol) const {
  for (Index i = 0; i < size(); ++i) {
    const RewardTable& m = member(i);
    if (m.rows() == table.rows() && m.cols() == table.cols() &&
        (m - table).cwiseAbs().maxCoeff() <= tol) {
      return i;
    }
  }
  return -1;
}

// --- LinearFunctionClass ----------------------------------------------------

LinearFunctionClass::LinearFunctionClass(Matrix features, Index contexts, Index actions,
                                         double norm_bound, double cardinality)
    : features_(std::move(features)),
      contexts_(contexts),
      actions_(actions),
      norm_bound_(norm_bound),
      cardinality_(cardinality) {
  if (contexts_ <= 0 || actions_ <= 0) throw InvalidInput("linear class needs a nonempty grid");
  if (features_.rows() != contexts_ * actions_ || features_.cols() == 0) {
    throw InvalidInput("feature matrix must have contexts*actions rows and d >= 1 columns");
  }
  if (!features_.allFinite()) throw InvalidInput("features must be finite");
  if (!(norm_bound_ > 0.0)) throw InvalidInput("norm bound B must be positive");
  if (!(cardinality_ >= 1.0)) throw InvalidInput("class cardinality must be >= 1");
  const double max_norm = features_.rowwise().norm().maxCoeff();
  if (max_norm > 1.0) {
    feature_scale_ = 1.0 / max_norm;
    features_ *= feature_scale_;
  }
}

LinearFunctionClass LinearFunctionClass::one_hot(Index contexts, Index actions, double norm_bound,
                                                 double cardinality) {
  return LinearFunctionClass(Matrix::Identity(contexts * actions, contexts * actions), contexts,
                             actions, norm_bound, cardinality);
}

double LinearFunctionClass::value(const Vector& theta, Index x, Index a) const {
  require_cell(x, a, contexts_, actions_);
  return clip_unit(feature(x, a).dot(theta));
}

RewardTable LinearFunctionClass::table(const Vector& theta) const {
  const Vector raw = features_ * theta;
  RewardTable out(contexts_, actions_);
  for (Index x = 0; x < contexts_; ++x) {
    for (Index a = 0; a < actions_; ++a) out(x, a) = clip_unit(raw(cell(x, a)));
  }
  return out;
}

// --- least squares ----------------------------------------------------------

Index erm_fit(const FiniteFunctionClass& cls, const Dataset& data) {
  Index best = 0;
  double best_loss = 0.0;
  for (Index i = 0; i < cls.size(); ++i) {
    double loss = 0.0;
    for (const Record& r : data) {
      require_cell(r.context, r.action, cls.contexts(), cls.actions());
      const double e = cls.value(i, r.context, r.action) - r.target;
      loss += e * e;
    }
    if (i == 0 || loss < best_loss) {
      best = i;
      best_loss = loss;
    }
  }
  return best;
}

Matrix covariance(const LinearFunctionClass& cls, const Dataset& data, double lambda) {
  require_lambda(lambda);
  Matrix cov = Matrix::Identity(cls.dim(), cls.dim()) * (lambda / cls.norm_bound());
  for (const Record& r : data) {
    require_cell(r.context, r.action, cls.contexts(), cls.actions());
    const Vector phi = cls.feature(r.context, r.action).transpose();
    cov.noalias() += phi * phi.transpose();
  }
  return cov;
}

Vector erm_fit(const LinearFunctionClass& cls, const Dataset& data, double lambda) {
  if (data.empty()) return Vector::Zero(cls.dim());
  const Matrix cov = covariance(cls, data, lambda);
  Vector rhs = Vector::Zero(cls.dim());
  for (const Record& r : data) rhs += cls.feature(r.context, r.action).transpose() * r.target;
  return cov.ldlt().solve(rhs);
}

double history_distance(const FiniteFunctionClass& cls, Index i, Index j, const Dataset& data) {
  double total = 0.0;
  for (const Record& r : data) {
    const double d = cls.value(i, r.context, r.action) - cls.value(j, r.context, r.action);
    total += d * d;
  }
  return total;
}

// --- confidence sets --------------------------------------------------------

FiniteConfidenceSet confidence_set(const FiniteFunctionClass& cls, Index erm, const Dataset& data,
                                   double beta, double lambda) {
  require_lambda(lambda);
  if (beta * beta < lambda) throw ConfigError("confidence set requires beta^2 >= lambda");
  FiniteConfidenceSet set;
  for (Index i = 0; i < cls.size(); ++i) {
    if (history_distance(cls, i, erm, data) + lambda <= beta * beta) set.members.push_back(i);
  }
  return set;
}

LinearConfidenceSet confidence_set(const LinearFunctionClass& cls, const Vector& erm,
                                   const Dataset& data, double beta, double lambda) {
  require_lambda(lambda);
  if (beta * beta < lambda) throw ConfigError("confidence set requires beta^2 >= lambda");
  return {erm, covariance(cls, data, lambda), beta, lambda};
}

// --- uncertainty --------------------------------------------------------------

double uncertainty(const FiniteFunctionClass& cls, const FiniteConfidenceSet& set, Index x,
                   Index a, const Dataset& data, double lambda) {
  require_lambda(lambda);
  require_cell(x, a, cls.contexts(), cls.actions());
  double best = 0.0;
  for (Index i : set.members) {
    for (Index j : set.members) {
      if (i == j) continue;
      const double num = std::abs(cls.value(i, x, a) - cls.value(j, x, a));
      if (num == 0.0) continue;
      best = std::max(best, num / std::sqrt(lambda + history_distance(cls, i, j, data)));
    }
  }
  return best;
}

double uncertainty(const LinearFunctionClass& cls, const LinearConfidenceSet& set, Index x,
                   Index a) {
  require_cell(x, a, cls.contexts(), cls.actions());
  const Vector phi = cls.feature(x, a).transpose();
  const double q = phi.dot(set.covariance.ldlt().solve(phi));
  return std::sqrt(std::max(q, 0.0));
}

double bonus(const FiniteFunctionClass& cls, const FiniteConfidenceSet& set, Index x, Index a,
             const Dataset& data, double lambda, double beta) {
  return bonus_from_uncertainty(beta, uncertainty(cls, set, x, a, data, lambda));
}

double bonus(const LinearFunctionClass& cls, const LinearConfidenceSet& set, Index x, Index a,
             double beta) {
  return bonus_from_uncertainty(beta, uncertainty(cls, set, x, a));
}

double EluderSum::add(double u) {
  total_ += std::min(1.0, u * u);
  return total_;
}

std::vector<double> eluder_sum(std::span<const double> uncertainties) {
  std::vector<double> curve;
  curve.reserve(uncertainties.size());
  EluderSum sum;
  for (double u : uncertainties) curve.push_back(sum.add(u));
  return curve;
}

double beta_schedule(double cardinality, Index horizon_t, Index horizon_h, double delta,
                     BetaVariant variant, double scale) {
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta must lie in (0, 1)");
  if (!(cardinality >= 1.0)) throw ConfigError("class cardinality must be >= 1");
  if (horizon_t < 1) throw ConfigError("T must be >= 1");
  if (horizon_h < 1) throw ConfigError("H must be >= 1");
  if (!(scale >= 0.0) || !std::isfinite(scale)) throw ConfigError("bonus scale must be >= 0");
  const double t = static_cast<double>(horizon_t);
  const double log_term =
      variant == BetaVariant::bandit
          ? std::log(cardinality * t / delta)
          : std::log(4.0 * cardinality * t * static_cast<double>(horizon_h) / delta);
  return scale * 4.0 * std::sqrt(log_term);
}

// --- FiniteLearner ----------------------------------------------------------

FiniteLearner::FiniteLearner(const FiniteFunctionClass& cls, double lambda)
    : cls_(&cls),
      lambda_(lambda),
      pair_sums_(Matrix::Zero(cls.size(), cls.size())),
      losses_(Vector::Zero(cls.size())) {
  require_lambda(lambda);
}

void FiniteLearner::add_point(Index x, Index a) {
  require_cell(x, a, cls_->contexts(), cls_->actions());
  const Index n = cls_->size();
  for (Index i = 0; i < n; ++i) {
    const double vi = cls_->value(i, x, a);
    for (Index j = i + 1; j < n; ++j) {
      const double d = vi - cls_->value(j, x, a);
      pair_sums_(i, j) += d * d;
      pair_sums_(j, i) = pair_sums_(i, j);
    }
  }
  ++count_;
}

void FiniteLearner::add_observation(Index x, Index a, double target) {
  add_point(x, a);
  for (Index i = 0; i < cls_->size(); ++i) {
    const double e = cls_->value(i, x, a) - target;
    losses_(i) += e * e;
  }
}

Index FiniteLearner::erm() const {
  Index best = 0;
  for (Index i = 1; i < losses_.size(); ++i) {
    if (losses_(i) < losses_(best)) best = i;
  }
  return best;
}

std::vector<Index> FiniteLearner::confidence_members(Index center, double beta) const {
  std::vector<Index> out;
  const double radius = beta * beta;
  if (radius < lambda_) return out;
  for (Index i = 0; i < cls_->size(); ++i) {
    if (pair_sums_(i, center) + lambda_ <= radius) out.push_back(i);
  }
  return out;
}

std::vector<Index> FiniteLearner::all_members() const {
  std::vector<Index> out(static_cast<size_t>(cls_->size()));
  for (Index i = 0; i < cls_->size(); ++i) out[static_cast<size_t>(i)] = i;
  return out;
}

double FiniteLearner::uncertainty(std::span<const Index> members, Index x, Index a) const {
  double best = 0.0;
  for (Index i : members) {
    const double vi = cls_->value(i, x, a);
    for (Index j : members) {
      if (j <= i) continue;  // the ratio is symmetric in (i, j)
      const double num = std::abs(vi - cls_->value(j, x, a));
      if (num == 0.0) continue;
      best = std::max(best, num / std::sqrt(lambda_ + pair_sums_(i, j)));
    }
  }
  return best;
}

RewardTable FiniteLearner::uncertainty_table(std::span<const Index> members) const {
  RewardTable out(cls_->contexts(), cls_->actions());
  for (Index x = 0; x < out.rows(); ++x) {
    for (Index a = 0; a < out.cols(); ++a) out(x, a) = uncertainty(members, x, a);
  }
  return out;
}

// --- LinearLearner ----------------------------------------------------------

LinearLearner::LinearLearner(const LinearFunctionClass& cls, double lambda, Index refresh_period)
    : cls_(&cls), lambda_(lambda), refresh_period_(refresh_period) {
  require_lambda(lambda);
  if (refresh_period_ < 1) throw InvalidInput("refresh period must be >= 1");
  const double ridge = lambda / cls.norm_bound();
  covariance_ = Matrix::Identity(cls.dim(), cls.dim()) * ridge;
  inverse_ = Matrix::Identity(cls.dim(), cls.dim()) / ridge;
  response_ = Vector::Zero(cls.dim());
}

void LinearLearner::add_point(Index x, Index a) {
  require_cell(x, a, cls_->contexts(), cls_->actions());
  const Vector phi = cls_->feature(x, a).transpose();
  covariance_.noalias() += phi * phi.transpose();
  const Vector u = inverse_ * phi;
  inverse_.noalias() -= (u * u.transpose()) / (1.0 + phi.dot(u));
  ++count_;
  if (++since_refresh_ >= refresh_period_) refresh();
}

void LinearLearner::add_observation(Index x, Index a, double target) {
  add_point(x, a);
  response_ += cls_->feature(x, a).transpose() * target;
}

void LinearLearner::refresh() {
  inverse_ = covariance_.ldlt().solve(Matrix::Identity(cls_->dim(), cls_->dim()));
  // Symmetrize; the solve leaves asymmetric rounding behind.
  inverse_ = (0.5 * (inverse_ + inverse_.transpose())).eval();
  since_refresh_ = 0;
}

double LinearLearner::uncertainty(Index x, Index a) const {
  require_cell(x, a, cls_->contexts(), cls_->actions());
  const auto phi = cls_->feature(x, a);
  const double q = phi.dot(inverse_ * phi.transpose());
  return std::sqrt(std::max(q, 0.0));
}

RewardTable LinearLearner::uncertainty_table() const {
  const Matrix& phi = cls_->features();
  const Vector q = (phi * inverse_).cwiseProduct(phi).rowwise().sum();
  RewardTable out(cls_->contexts(), cls_->actions());
  for (Index x = 0; x < out.rows(); ++x) {
    for (Index a = 0; a < out.cols(); ++a) out(x, a) = std::sqrt(std::max(q(cls_->cell(x, a)), 0.0));
  }
  return out;
}

double class_cardinality(const FunctionClass& cls) {
  return std::visit(
      [](const auto& c) -> double {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, FiniteFunctionClass>) {
          return static_cast<double>(c.size());
        } else {
          return c.cardinality();
        }
      },
      cls);
}

}  // namespace klrl
