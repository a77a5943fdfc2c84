#pragma once

#include <random>
#include <string>

namespace klrl {

using Rng = std::mt19937_64;

enum class NoiseKind { none, gaussian, bernoulli };

/// Zero-mean, 1-sub-Gaussian observation noise.
///
/// gaussian:  N(0, sigma²) with sigma in [0, 1].
/// bernoulli: B − p with B ∼ Bernoulli(p); bounded in an interval of length 1.
struct NoiseSpec {
  NoiseKind kind = NoiseKind::gaussian;
  double sigma = 0.5;
  double p = 0.5;

  static NoiseSpec none() { return {NoiseKind::none, 0.0, 0.5}; }
  static NoiseSpec gaussian(double sigma) { return {NoiseKind::gaussian, sigma, 0.5}; }
  static NoiseSpec bernoulli(double p) { return {NoiseKind::bernoulli, 0.0, p}; }

  /// Throws ConfigError when the parameters leave the 1-sub-Gaussian family.
  void validate() const;

  /// Draws one sample. Noise-free specs do not advance the generator.
  double sample(Rng& rng) const;

  bool is_deterministic() const {
    return kind == NoiseKind::none || (kind == NoiseKind::gaussian && sigma == 0.0);
  }
};

std::string to_string(NoiseKind kind);
NoiseKind parse_noise_kind(const std::string& name);

}  // namespace klrl
