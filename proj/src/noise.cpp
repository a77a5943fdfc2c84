#include "klrl/noise.hpp"

#include "klrl/types.hpp"

namespace klrl {

void NoiseSpec::validate() const {
  switch (kind) {
    case NoiseKind::none:
      return;
    case NoiseKind::gaussian:
      if (!(sigma >= 0.0 && sigma <= 1.0)) {
        throw ConfigError("noise_sigma must lie in [0, 1] for 1-sub-Gaussian noise");
      }
      return;
    case NoiseKind::bernoulli:
      if (!(p > 0.0 && p < 1.0)) throw ConfigError("noise_p must lie in (0, 1)");
      return;
  }
}

double NoiseSpec::sample(Rng& rng) const {
  if (is_deterministic()) return 0.0;
  if (kind == NoiseKind::gaussian) return std::normal_distribution<double>(0.0, sigma)(rng);
  return (std::bernoulli_distribution(p)(rng) ? 1.0 : 0.0) - p;
}

std::string to_string(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::none:
      return "none";
    case NoiseKind::gaussian:
      return "gaussian";
    case NoiseKind::bernoulli:
      return "bernoulli";
  }
  return "none";
}

NoiseKind parse_noise_kind(const std::string& name) {
  if (name == "none") return NoiseKind::none;
  if (name == "gaussian") return NoiseKind::gaussian;
  if (name == "bernoulli") return NoiseKind::bernoulli;
  throw ConfigError("unknown noise kind '" + name + "' (expected none, gaussian or bernoulli)");
}

}  // namespace klrl
