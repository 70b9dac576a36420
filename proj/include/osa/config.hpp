#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "osa/markov.hpp"
#include "osa/sensor.hpp"

namespace osa {

// --- experiment configuration file ----------------------------------------
//
// Line-oriented text with ini-style sections:
//
//   [model]
//   channels = 3
//   alpha = 0.2 0.4 0.6          # per-channel busy->idle
//   beta = 0.8 0.6 0.4           # per-channel idle->idle
//   bandwidth = 1 1 1
//   # correlated models instead give explicit rows; state keys are printed
//   # with channel 1 first, 1 = idle:
//   #   P [0000] [0111] = 0.6
//   # source states with no entries jump to the lowest specified source.
//
//   [detector]
//   samples = 10                 # M
//   sigma0_db = 0
//   sigma1_db = 5
//
//   [run]
//   strategy = separation-exact  # separation-myopic | sp | phy | mac
//   horizon = 10
//   zeta = 0.05
//   trials = 20000
//   seed = 1
//   c = 0                        # per-measurement slot-time fraction
//   set_size = 1                 # L
//   psi = 0                      # relative alpha/beta mismatch
//   initial_belief = stationary  # or uniform
//
//   [sweep]
//   type = delta | samples | psi | strategy | none
//   values = 0.01 0.02 0.05
//   zetas = 0.01 0.05 0.1        # samples-sweep runs once per zeta

struct ModelSpec {
  int channels = 0;
  std::vector<double> alpha, beta, bandwidth;
  // explicit rows for correlated models, keyed (from, to)
  std::map<std::pair<StateIndex, StateIndex>, double> entries;

  bool has_entries() const { return !entries.empty(); }

  TransitionModel build() const {
    if (channels < 1) throw std::invalid_argument("model: channels not set");
    std::vector<double> bw = bandwidth;
    if (bw.empty()) bw.assign(channels, 1.0);
    if (!has_entries()) {
      if (static_cast<int>(alpha.size()) != channels ||
          static_cast<int>(beta.size()) != channels)
        throw std::invalid_argument("model: alpha/beta length != channels");
      return TransitionModel::independent(alpha, beta, bw);
    }
    const std::size_t ns = std::size_t{1} << channels;
    std::vector<std::vector<double>> mat(ns, std::vector<double>(ns, 0.0));
    std::vector<bool> specified(ns, false);
    for (const auto& [key, p] : entries) {
      mat[key.first][key.second] += p;
      specified[key.first] = true;
    }
    StateIndex anchor = ns;
    for (StateIndex s = 0; s < ns; ++s) {
      if (specified[s]) {
        anchor = s;
        break;
      }
    }
    for (StateIndex s = 0; s < ns; ++s) {
      if (!specified[s]) mat[s][anchor] = 1.0;  // unreachable filler rows
    }
    for (StateIndex s = 0; s < ns; ++s) {
      double sum = 0.0;
      for (double p : mat[s]) sum += p;
      if (std::fabs(sum - 1.0) > 1e-9)
        throw std::invalid_argument("model: matrix row does not sum to 1");
      for (auto& p : mat[s]) p /= sum;
    }
    return TransitionModel::full(std::move(mat), bw);
  }
};

// Independent chain with alpha, beta scaled by (1 + psi), clipped so the
// assumed chain stays ergodic.
inline TransitionModel perturbed_model(const TransitionModel& model, double psi) {
  if (!model.factored())
    throw std::invalid_argument("perturbed_model: needs a factored model");
  auto clip = [](double p) { return std::clamp(p, 0.001, 0.999); };
  std::vector<double> a, b;
  for (int ch = 0; ch < model.num_channels(); ++ch) {
    a.push_back(clip(model.alpha(ch) * (1.0 + psi)));
    b.push_back(clip(model.beta(ch) * (1.0 + psi)));
  }
  return TransitionModel::independent(a, b, model.bandwidths());
}

struct DetectorSpec {
  int samples = 10;
  double sigma0_db = 0.0;
  double sigma1_db = 5.0;

  GaussianChannelParams build() const {
    GaussianChannelParams p{samples, db_to_linear(sigma0_db),
                            db_to_linear(sigma1_db)};
    p.validate();
    return p;
  }
};

enum class Strategy { SeparationExact, SeparationMyopic, Sp, Phy, Mac };

inline Strategy parse_strategy(const std::string& s) {
  if (s == "separation-exact") return Strategy::SeparationExact;
  if (s == "separation-myopic") return Strategy::SeparationMyopic;
  if (s == "sp") return Strategy::Sp;
  if (s == "phy") return Strategy::Phy;
  if (s == "mac") return Strategy::Mac;
  throw std::invalid_argument("unknown strategy: " + s);
}

inline const char* strategy_name(Strategy s) {
  switch (s) {
    case Strategy::SeparationExact: return "separation-exact";
    case Strategy::SeparationMyopic: return "separation-myopic";
    case Strategy::Sp: return "sp";
    case Strategy::Phy: return "phy";
    case Strategy::Mac: return "mac";
  }
  return "?";
}

struct RunSpec {
  Strategy strategy = Strategy::SeparationExact;
  int horizon = 10;
  double zeta = 0.05;
  std::size_t trials = 1000;
  std::uint64_t seed = 1;
  double c = 0.0;  // slot-time cost per measurement; reward scale = 1 - M c
  int set_size = 1;
  double psi = 0.0;
  bool uniform_initial_belief = false;

  void validate() const {
    if (horizon < 1) throw std::invalid_argument("run: horizon must be >= 1");
    if (!(zeta > 0.0 && zeta < 1.0))
      throw std::invalid_argument("run: zeta out of (0,1)");
    if (trials < 1) throw std::invalid_argument("run: trials must be >= 1");
    if (set_size < 1) throw std::invalid_argument("run: set_size must be >= 1");
    if (c < 0.0) throw std::invalid_argument("run: c must be >= 0");
  }
};

struct SweepSpec {
  enum class Kind { None, Delta, Samples, Psi, StrategyCompare };
  Kind kind = Kind::None;
  std::vector<double> values;
  std::vector<double> zetas;
};

struct ExperimentConfig {
  ModelSpec model;
  DetectorSpec detector;
  RunSpec run;
  SweepSpec sweep;

  static ExperimentConfig parse(std::istream& is);
  static ExperimentConfig load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::invalid_argument("cannot open config file: " + path);
    return parse(f);
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

inline std::vector<double> parse_numbers(const std::string& s) {
  std::istringstream iss(s);
  std::vector<double> out;
  double v;
  while (iss >> v) out.push_back(v);
  if (!iss.eof()) throw std::invalid_argument("bad numeric list: " + s);
  return out;
}

// "[0111]": character i is channel i+1, '1' = idle; bit i of the index
inline StateIndex parse_state_key(const std::string& key, int channels) {
  if (key.size() != static_cast<std::size_t>(channels) + 2 ||
      key.front() != '[' || key.back() != ']')
    throw std::invalid_argument("bad state key: " + key);
  StateIndex s = 0;
  for (int i = 0; i < channels; ++i) {
    const char c = key[i + 1];
    if (c == '1')
      s |= StateIndex{1} << i;
    else if (c != '0')
      throw std::invalid_argument("bad state key: " + key);
  }
  return s;
}

}  // namespace detail

inline ExperimentConfig ExperimentConfig::parse(std::istream& is) {
  ExperimentConfig cfg;
  std::string line, section;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[' && line.back() == ']' && line.find(' ') == std::string::npos) {
      section = line.substr(1, line.size() - 2);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": expected key = value");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    auto num = [&] { return detail::parse_numbers(value); };
    auto one = [&] {
      const auto v = detail::parse_numbers(value);
      if (v.size() != 1)
        throw std::invalid_argument("config line " + std::to_string(lineno) +
                                    ": expected a single number");
      return v[0];
    };
    if (section == "model") {
      if (key == "channels") cfg.model.channels = static_cast<int>(one());
      else if (key == "alpha") cfg.model.alpha = num();
      else if (key == "beta") cfg.model.beta = num();
      else if (key == "bandwidth") cfg.model.bandwidth = num();
      else if (key.rfind("P ", 0) == 0) {
        std::istringstream kss(key.substr(2));
        std::string from, to;
        if (!(kss >> from >> to))
          throw std::invalid_argument("config line " + std::to_string(lineno) +
                                      ": bad transition key");
        if (cfg.model.channels < 1)
          throw std::invalid_argument("config: set channels before P entries");
        cfg.model.entries[{detail::parse_state_key(from, cfg.model.channels),
                           detail::parse_state_key(to, cfg.model.channels)}] = one();
      } else
        throw std::invalid_argument("config: unknown model key: " + key);
    } else if (section == "detector") {
      if (key == "samples") cfg.detector.samples = static_cast<int>(one());
      else if (key == "sigma0_db") cfg.detector.sigma0_db = one();
      else if (key == "sigma1_db") cfg.detector.sigma1_db = one();
      else throw std::invalid_argument("config: unknown detector key: " + key);
    } else if (section == "run") {
      if (key == "strategy") cfg.run.strategy = parse_strategy(value);
      else if (key == "horizon") cfg.run.horizon = static_cast<int>(one());
      else if (key == "zeta") cfg.run.zeta = one();
      else if (key == "trials") cfg.run.trials = static_cast<std::size_t>(one());
      else if (key == "seed") cfg.run.seed = static_cast<std::uint64_t>(one());
      else if (key == "c") cfg.run.c = one();
      else if (key == "set_size") cfg.run.set_size = static_cast<int>(one());
      else if (key == "psi") cfg.run.psi = one();
      else if (key == "initial_belief") {
        if (value == "uniform") cfg.run.uniform_initial_belief = true;
        else if (value == "stationary") cfg.run.uniform_initial_belief = false;
        else throw std::invalid_argument("config: bad initial_belief: " + value);
      } else
        throw std::invalid_argument("config: unknown run key: " + key);
    } else if (section == "sweep") {
      if (key == "type") {
        if (value == "none") cfg.sweep.kind = SweepSpec::Kind::None;
        else if (value == "delta") cfg.sweep.kind = SweepSpec::Kind::Delta;
        else if (value == "samples") cfg.sweep.kind = SweepSpec::Kind::Samples;
        else if (value == "psi") cfg.sweep.kind = SweepSpec::Kind::Psi;
        else if (value == "strategy") cfg.sweep.kind = SweepSpec::Kind::StrategyCompare;
        else throw std::invalid_argument("config: bad sweep type: " + value);
      } else if (key == "values") cfg.sweep.values = num();
      else if (key == "zetas") cfg.sweep.zetas = num();
      else throw std::invalid_argument("config: unknown sweep key: " + key);
    } else {
      throw std::invalid_argument("config: unknown section: [" + section + "]");
    }
  }
  cfg.run.validate();
  return cfg;
}

}  // namespace osa
