#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>

namespace klrl {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Rows index contexts (or states), columns index actions.
using RewardTable = Eigen::MatrixXd;

/// One conditional distribution over actions per row.
using PolicyTable = Eigen::MatrixXd;

/// Malformed numerical input (non-finite scores, shape mismatch, bad index).
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A configuration that violates a documented constraint.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An operation was called outside its mathematical domain.
class PreconditionError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace klrl
