#pragma once

// Experiment configuration: a flat `key = value` grammar with [section]
// headers. Parsing resolves presets and defaults so that the canonical echo
// fully determines every run.
//
//   [experiment]  mode, T, seeds, delta, lambda, bonus_scale, out, workers, burn_in, scope
//   [bandit]      preset, contexts, actions, eta, instance_seed, noise, sigma, p
//   [mdp]         preset, states, actions, horizon, eta, instance_seed, noise, sigma, p
//   [class]       kind, size, truth_index, norm_bound, cardinality, bonus_cardinality
//   [sweep]       bonus_scales

#include "klrl/bandit.hpp"
#include "klrl/function_classes.hpp"
#include "klrl/mdp.hpp"
#include "klrl/noise.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace klrl::harness {

enum class Mode { bandit, mdp, theory };

std::string to_string(Mode mode);

struct ExperimentConfig {
  Mode mode = Mode::bandit;
  Index horizon_t = 1000;
  std::vector<std::uint64_t> seeds{1};
  double delta = 0.1;
  double lambda = 1.0;
  double bonus_scale = 1.0;
  std::string out = "results";
  Index workers = 1;
  Index burn_in = 20;
  UncertaintyScope scope = UncertaintyScope::confidence_set;

  // Instance. Presets overwrite sizes and eta when resolved.
  std::string preset;
  Index contexts = 1;  ///< contexts (bandit) or states (mdp)
  Index actions = 2;
  Index horizon_h = 1;
  double eta = 1.0;
  std::uint64_t instance_seed = 1;
  NoiseSpec noise;

  // Function class.
  std::string class_kind;  ///< bandit: preset | finite | one_hot;  mdp: one_hot | singleton
  Index class_size = 8;
  Index truth_index = 1;
  double norm_bound = 0.0;  ///< 0 selects sqrt(cells)
  double cardinality = 1.0;
  double bonus_cardinality = 1.0;

  std::vector<double> sweep_scales;
};

/// Parses and resolves. Throws ConfigError naming the offending key or line.
ExperimentConfig parse_config(const std::string& text);

/// Reads `path`; a missing or unreadable file is a ConfigError naming the path.
ExperimentConfig load_config(const std::string& path);

/// Defaults for a mode with no file.
ExperimentConfig default_config(Mode mode);

/// Fills preset-determined fields and mode-dependent defaults, then validates.
void resolve(ExperimentConfig& config);

/// Canonical text form; parse_config(canonical(c)) reproduces c exactly.
std::string canonical(const ExperimentConfig& config);

/// Parses "1,2,5-8" style seed lists.
std::vector<std::uint64_t> parse_seed_list(const std::string& text);

// --- instance construction -------------------------------------------------------

struct BanditSetup {
  BanditInstance instance;
  FunctionClass cls;
};

struct MdpSetup {
  MdpInstance instance;
  std::vector<FunctionClass> classes;
};

BanditSetup make_bandit(const ExperimentConfig& config);
MdpSetup make_mdp(const ExperimentConfig& config);

}  // namespace klrl::harness
