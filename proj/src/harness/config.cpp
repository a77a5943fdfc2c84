#include "klrl/harness/config.hpp"

#include "klrl/instances.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace klrl::harness {

std::string to_string(Mode mode) {
  switch (mode) {
    case Mode::bandit: return "bandit";
    case Mode::mdp: return "mdp";
    case Mode::theory: return "theory";
  }
  return "bandit";
}

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) out.push_back(trim(item));
  return out;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& key, const std::string& value) {
  double out = 0.0;
  const char* end = value.data() + value.size();
  const auto res = std::from_chars(value.data(), end, out);
  if (res.ec != std::errc() || res.ptr != end || !std::isfinite(out)) {
    throw ConfigError(key + ": expected a finite number, got '" + value + "'");
  }
  return out;
}

template <typename Int>
Int parse_int(const std::string& key, const std::string& value) {
  Int out = 0;
  const char* end = value.data() + value.size();
  const auto res = std::from_chars(value.data(), end, out);
  if (res.ec != std::errc() || res.ptr != end) {
    throw ConfigError(key + ": expected an integer, got '" + value + "'");
  }
  return out;
}

Mode parse_mode(const std::string& value) {
  if (value == "bandit") return Mode::bandit;
  if (value == "mdp") return Mode::mdp;
  if (value == "theory") return Mode::theory;
  throw ConfigError("experiment.mode: expected bandit, mdp or theory, got '" + value + "'");
}

UncertaintyScope parse_scope(const std::string& value) {
  if (value == "confidence_set") return UncertaintyScope::confidence_set;
  if (value == "full_class") return UncertaintyScope::full_class;
  throw ConfigError("experiment.scope: expected confidence_set or full_class, got '" + value + "'");
}

std::string scope_name(UncertaintyScope scope) {
  return scope == UncertaintyScope::full_class ? "full_class" : "confidence_set";
}

bool fixed_preset(const ExperimentConfig& c) { return c.preset != "random"; }

std::string instance_section(Mode mode) { return mode == Mode::mdp ? "mdp" : "bandit"; }

/// Sets the instance shape, eta and default noise of a preset.
void apply_preset(ExperimentConfig& c) {
  if (c.mode == Mode::bandit) {
    if (c.preset == "two_arm") {
      const BanditInstance inst = two_arm_bandit();
      c.contexts = inst.contexts();
      c.actions = inst.actions();
      c.eta = inst.eta;
      c.noise = inst.noise;
    } else if (c.preset == "deceptive") {
      const BanditInstance inst = deceptive_bandit();
      c.contexts = inst.contexts();
      c.actions = inst.actions();
      c.eta = inst.eta;
      c.noise = inst.noise;
    } else if (c.preset == "random") {
      c.noise = NoiseSpec::gaussian(0.5);
    } else {
      throw ConfigError("bandit.preset: unknown preset '" + c.preset + "'");
    }
    c.horizon_h = 1;
    c.class_kind = c.preset == "random" ? "finite" : "preset";
  } else if (c.mode == Mode::mdp) {
    if (c.preset == "scaling") {
      const MdpInstance inst = scaling_mdp();
      c.contexts = inst.states;
      c.actions = inst.actions;
      c.horizon_h = inst.horizon;
      c.eta = inst.eta;
    } else if (c.preset != "random") {
      throw ConfigError("mdp.preset: unknown preset '" + c.preset + "'");
    }
    c.noise = NoiseSpec::none();
    c.class_kind = "one_hot";
  }
}

using Entries = std::map<std::string, std::pair<std::string, int>>;

Entries read_entries(const std::string& text) {
  static const std::set<std::string> sections{"experiment", "bandit", "mdp", "class", "sweep"};
  Entries entries;
  std::string section;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(raw.substr(0, raw.find('#')));
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(line_no);
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      if (sections.count(section) == 0) throw ConfigError(where + ": unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
    if (section.empty()) throw ConfigError(where + ": key outside any [section]");
    const std::string key = section + "." + trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (value.empty()) throw ConfigError(where + ": " + key + " has no value");
    if (!entries.emplace(key, std::make_pair(value, line_no)).second) {
      throw ConfigError(where + ": duplicate key " + key);
    }
  }
  return entries;
}

void apply_noise_key(ExperimentConfig& c, const std::string& name, const std::string& key,
                     const std::string& value) {
  if (name == "noise") {
    // Keys are visited in sorted order, so sigma and p override these defaults.
    switch (parse_noise_kind(value)) {
      case NoiseKind::none: c.noise = NoiseSpec::none(); break;
      case NoiseKind::gaussian: c.noise = NoiseSpec::gaussian(0.5); break;
      case NoiseKind::bernoulli: c.noise = NoiseSpec::bernoulli(0.5); break;
    }
  } else if (name == "sigma") {
    c.noise.sigma = parse_double(key, value);
  } else {
    c.noise.p = parse_double(key, value);
  }
}

double smallest_class_cardinality(const ExperimentConfig& c) {
  if (c.mode == Mode::bandit) {
    if (c.class_kind == "preset") return 8.0;
    if (c.class_kind == "finite") return static_cast<double>(c.class_size);
    return c.cardinality;
  }
  if (c.class_kind == "singleton") return c.bonus_cardinality;
  return c.cardinality * c.bonus_cardinality;
}

}  // namespace

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  for (const std::string& item : split(text, ',')) {
    if (item.empty()) throw ConfigError("seeds: empty entry in '" + text + "'");
    const auto dash = item.find('-');
    if (dash == std::string::npos) {
      seeds.push_back(parse_int<std::uint64_t>("seeds", item));
      continue;
    }
    const auto lo = parse_int<std::uint64_t>("seeds", trim(item.substr(0, dash)));
    const auto hi = parse_int<std::uint64_t>("seeds", trim(item.substr(dash + 1)));
    if (hi < lo) throw ConfigError("seeds: descending range '" + item + "'");
    for (std::uint64_t s = lo; s <= hi; ++s) seeds.push_back(s);
  }
  if (seeds.empty()) throw ConfigError("seeds: list is empty");
  return seeds;
}

ExperimentConfig default_config(Mode mode) {
  ExperimentConfig c;
  c.mode = mode;
  c.preset = mode == Mode::mdp ? "scaling" : "two_arm";
  apply_preset(c);
  resolve(c);
  return c;
}

void resolve(ExperimentConfig& c) {
  if (c.seeds.empty()) throw ConfigError("experiment.seeds: list is empty");
  if (c.horizon_t < 0) throw ConfigError("experiment.T must be >= 0");
  if (!(c.delta > 0.0 && c.delta < 1.0)) throw ConfigError("experiment.delta must lie in (0, 1)");
  if (!(c.lambda > 0.0)) throw ConfigError("experiment.lambda must be positive");
  if (!(c.bonus_scale >= 0.0)) throw ConfigError("experiment.bonus_scale must be >= 0");
  if (c.workers < 1) throw ConfigError("experiment.workers must be >= 1");
  if (c.burn_in < 0) throw ConfigError("experiment.burn_in must be >= 0");
  for (const double s : c.sweep_scales) {
    if (!(s >= 0.0)) throw ConfigError("sweep.bonus_scales entries must be >= 0");
  }
  if (c.mode == Mode::theory) return;

  const std::string sec = instance_section(c.mode);
  if (!(c.eta > 0.0)) throw ConfigError(sec + ".eta must be positive");
  if (c.contexts < 1 || c.actions < 1 || c.horizon_h < 1) {
    throw ConfigError(sec + ": sizes must be positive");
  }
  try {
    c.noise.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(sec + ".noise: " + e.what());
  }
  if (c.mode == Mode::bandit) {
    if (c.class_kind != "preset" && c.class_kind != "finite" && c.class_kind != "one_hot") {
      throw ConfigError("class.kind: expected preset, finite or one_hot for bandit runs");
    }
    if (c.class_kind == "preset" && !fixed_preset(c)) {
      throw ConfigError("class.kind: the random preset has no preset class");
    }
  } else if (c.class_kind != "one_hot" && c.class_kind != "singleton") {
    throw ConfigError("class.kind: expected one_hot or singleton for mdp runs");
  }
  if (c.class_size < 1) throw ConfigError("class.size must be >= 1");
  if (c.truth_index < 0 || c.truth_index >= c.class_size) {
    throw ConfigError("class.truth_index must lie in [0, size)");
  }
  if (!(c.norm_bound >= 0.0)) throw ConfigError("class.norm_bound must be >= 0");
  if (!(c.cardinality >= 1.0)) throw ConfigError("class.cardinality must be >= 1");
  if (!(c.bonus_cardinality >= 1.0)) throw ConfigError("class.bonus_cardinality must be >= 1");

  if (c.horizon_t >= 1) {
    const double beta =
        beta_schedule(smallest_class_cardinality(c), c.horizon_t, c.horizon_h, c.delta,
                      c.mode == Mode::mdp ? BetaVariant::mdp : BetaVariant::bandit);
    if (c.lambda > 0.5 * beta * beta) {
      throw ConfigError("experiment.lambda = " + fmt(c.lambda) + " exceeds beta^2/2 = " +
                        fmt(0.5 * beta * beta));
    }
  }
}

ExperimentConfig parse_config(const std::string& text) {
  const Entries entries = read_entries(text);
  auto get = [&](const std::string& key) -> const std::string* {
    const auto it = entries.find(key);
    return it == entries.end() ? nullptr : &it->second.first;
  };

  const std::string* mode_value = get("experiment.mode");
  ExperimentConfig c;
  c.mode = mode_value != nullptr ? parse_mode(*mode_value) : Mode::bandit;
  c.preset = c.mode == Mode::mdp ? "scaling" : "two_arm";
  const std::string sec = instance_section(c.mode);
  if (const std::string* preset = get(sec + ".preset")) c.preset = *preset;
  if (c.mode != Mode::theory) apply_preset(c);

  const std::string other = c.mode == Mode::mdp ? "bandit." : "mdp.";
  for (const auto& [key, entry] : entries) {
    const auto& [value, line_no] = entry;
    const std::string where = "line " + std::to_string(line_no) + ": ";
    const auto dot = key.find('.');
    const std::string section = key.substr(0, dot);
    const std::string name = key.substr(dot + 1);

    if (key.rfind(other, 0) == 0 || (c.mode == Mode::theory && (section == "bandit" ||
                                                                section == "mdp" ||
                                                                section == "class"))) {
      throw ConfigError(where + "[" + section + "] does not apply to mode " + to_string(c.mode));
    }
    if (section == "experiment") {
      if (name == "mode") continue;
      if (name == "T") c.horizon_t = parse_int<Index>(key, value);
      else if (name == "seeds") c.seeds = parse_seed_list(value);
      else if (name == "delta") c.delta = parse_double(key, value);
      else if (name == "lambda") c.lambda = parse_double(key, value);
      else if (name == "bonus_scale") c.bonus_scale = parse_double(key, value);
      else if (name == "out") c.out = value;
      else if (name == "workers") c.workers = parse_int<Index>(key, value);
      else if (name == "burn_in") c.burn_in = parse_int<Index>(key, value);
      else if (name == "scope") c.scope = parse_scope(value);
      else throw ConfigError(where + "unknown key " + key);
    } else if (section == "bandit" || section == "mdp") {
      const bool shape_key = name == "contexts" || name == "states" || name == "actions" ||
                             name == "horizon" || name == "eta" || name == "instance_seed";
      if (name == "preset") continue;
      if (shape_key && fixed_preset(c)) {
        throw ConfigError(where + key + " is fixed by preset '" + c.preset + "'");
      }
      if ((section == "bandit" && name == "contexts") || (section == "mdp" && name == "states")) {
        c.contexts = parse_int<Index>(key, value);
      } else if (name == "actions") {
        c.actions = parse_int<Index>(key, value);
      } else if (section == "mdp" && name == "horizon") {
        c.horizon_h = parse_int<Index>(key, value);
      } else if (name == "eta") {
        c.eta = parse_double(key, value);
      } else if (name == "instance_seed") {
        c.instance_seed = parse_int<std::uint64_t>(key, value);
      } else if (name == "noise" || name == "sigma" || name == "p") {
        apply_noise_key(c, name, key, value);
      } else {
        throw ConfigError(where + "unknown key " + key);
      }
    } else if (section == "class") {
      if (name == "kind") c.class_kind = value;
      else if (name == "size") c.class_size = parse_int<Index>(key, value);
      else if (name == "truth_index") c.truth_index = parse_int<Index>(key, value);
      else if (name == "norm_bound") c.norm_bound = parse_double(key, value);
      else if (name == "cardinality") c.cardinality = parse_double(key, value);
      else if (name == "bonus_cardinality") c.bonus_cardinality = parse_double(key, value);
      else throw ConfigError(where + "unknown key " + key);
    } else if (section == "sweep") {
      if (name != "bonus_scales") throw ConfigError(where + "unknown key " + key);
      c.sweep_scales.clear();
      for (const std::string& item : split(value, ',')) c.sweep_scales.push_back(parse_double(key, item));
    }
  }
  resolve(c);
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_config(buf.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

std::string canonical(const ExperimentConfig& c) {
  std::ostringstream out;
  out << "[experiment]\n";
  out << "mode = " << to_string(c.mode) << "\n";
  out << "T = " << c.horizon_t << "\n";
  out << "seeds = ";
  for (size_t i = 0; i < c.seeds.size(); ++i) out << (i ? "," : "") << c.seeds[i];
  out << "\n";
  out << "delta = " << fmt(c.delta) << "\n";
  out << "lambda = " << fmt(c.lambda) << "\n";
  out << "bonus_scale = " << fmt(c.bonus_scale) << "\n";
  out << "out = " << c.out << "\n";
  out << "workers = " << c.workers << "\n";
  out << "burn_in = " << c.burn_in << "\n";
  out << "scope = " << scope_name(c.scope) << "\n";
  if (c.mode != Mode::theory) {
    const bool mdp = c.mode == Mode::mdp;
    out << "\n[" << instance_section(c.mode) << "]\n";
    out << "preset = " << c.preset << "\n";
    if (!fixed_preset(c)) {
      out << (mdp ? "states = " : "contexts = ") << c.contexts << "\n";
      out << "actions = " << c.actions << "\n";
      if (mdp) out << "horizon = " << c.horizon_h << "\n";
      out << "eta = " << fmt(c.eta) << "\n";
      out << "instance_seed = " << c.instance_seed << "\n";
    }
    out << "noise = " << klrl::to_string(c.noise.kind) << "\n";
    if (c.noise.kind == NoiseKind::gaussian) out << "sigma = " << fmt(c.noise.sigma) << "\n";
    if (c.noise.kind == NoiseKind::bernoulli) out << "p = " << fmt(c.noise.p) << "\n";

    out << "\n[class]\n";
    out << "kind = " << c.class_kind << "\n";
    out << "size = " << c.class_size << "\n";
    out << "truth_index = " << c.truth_index << "\n";
    out << "norm_bound = " << fmt(c.norm_bound) << "\n";
    out << "cardinality = " << fmt(c.cardinality) << "\n";
    out << "bonus_cardinality = " << fmt(c.bonus_cardinality) << "\n";
  }
  if (!c.sweep_scales.empty()) {
    out << "\n[sweep]\nbonus_scales = ";
    for (size_t i = 0; i < c.sweep_scales.size(); ++i) out << (i ? "," : "") << fmt(c.sweep_scales[i]);
    out << "\n";
  }
  return out.str();
}

// --- instance construction ----------------------------------------------------------

BanditSetup make_bandit(const ExperimentConfig& c) {
  if (c.mode != Mode::bandit) throw ConfigError("make_bandit: config mode is " + to_string(c.mode));
  BanditInstance inst;
  Rng rng(c.instance_seed);
  if (c.preset == "two_arm") {
    inst = two_arm_bandit();
  } else if (c.preset == "deceptive") {
    inst = deceptive_bandit();
  } else {
    inst = random_bandit(rng, c.contexts, c.actions, c.eta, c.eta);
  }
  inst.noise = c.noise;
  inst.validate();

  const double bound = c.norm_bound > 0.0
                           ? c.norm_bound
                           : std::sqrt(static_cast<double>(inst.contexts() * inst.actions()));
  if (c.class_kind == "preset") {
    return {inst, c.preset == "two_arm" ? two_arm_class() : deceptive_class()};
  }
  if (c.class_kind == "finite") {
    return {inst, random_finite_class(rng, inst.reward, c.class_size, c.truth_index)};
  }
  return {inst, LinearFunctionClass::one_hot(inst.contexts(), inst.actions(), bound, c.cardinality)};
}

MdpSetup make_mdp(const ExperimentConfig& c) {
  if (c.mode != Mode::mdp) throw ConfigError("make_mdp: config mode is " + to_string(c.mode));
  MdpInstance inst;
  if (c.preset == "scaling") {
    inst = scaling_mdp();
  } else {
    Rng rng(c.instance_seed);
    inst = random_mdp(rng, c.contexts, c.actions, c.horizon_h, c.eta);
  }
  inst.noise = c.noise;
  inst.validate();

  MdpSetup setup{inst, {}};
  if (c.class_kind == "singleton") {
    const OptimalSolution opt = optimal_backward_induction(inst);
    for (const RewardTable& q : opt.values.q) setup.classes.emplace_back(FiniteFunctionClass({q}));
    return setup;
  }
  const double bound = c.norm_bound > 0.0
                           ? c.norm_bound
                           : std::sqrt(static_cast<double>(inst.states * inst.actions));
  for (Index h = 0; h < inst.horizon; ++h) {
    setup.classes.emplace_back(
        LinearFunctionClass::one_hot(inst.states, inst.actions, bound, c.cardinality));
  }
  return setup;
}

}  // namespace klrl::harness
