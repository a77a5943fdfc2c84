#pragma once

// Least-squares comparison of logarithmic and square-root growth models for a
// cumulative regret curve.

#include "klrl/types.hpp"

#include <span>
#include <string>

namespace klrl::harness {

enum class GrowthModel { log, sqrt, inconclusive };

std::string to_string(GrowthModel model);

struct FitResult {
  double log_a = 0.0;  ///< y ≈ a·ln t + b
  double log_b = 0.0;
  double sqrt_c = 0.0;  ///< y ≈ c·√t + d
  double sqrt_d = 0.0;
  double log_rss = 0.0;
  double sqrt_rss = 0.0;
  GrowthModel preferred = GrowthModel::inconclusive;
  Index points = 0;
};

/// Fits both models on rounds t > burn_in (t is 1-based: y[0] is round 1).
/// Throws InvalidInput unless y.size() > burn_in + 10. The model with the
/// strictly smaller residual wins; residuals equal to within 1e-12 of the
/// total variation, or a curve with no variation, give `inconclusive`.
FitResult fit_regret_models(std::span<const double> cumulative, Index burn_in = 20);

std::string fit_csv_header();
std::string to_csv_row(const FitResult& fit);

}  // namespace klrl::harness
