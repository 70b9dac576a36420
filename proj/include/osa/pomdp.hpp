#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "osa/lp.hpp"
#include "osa/markov.hpp"
#include "osa/separation.hpp"

namespace osa {

// Linear piece of a value function. Coefficients are indexed over
// pre-transition states, so V_t(L) = sum_s lambda_s * coeff[s].
struct AlphaVector {
  std::vector<double> coeffs;
  std::vector<int> channels;  // sensing action (sorted channel set)
};

struct ValueFunction {
  int stage = 1;
  std::vector<AlphaVector> alphas;

  double value(const Belief& belief) const {
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& a : alphas) {
      double v = 0.0;
      for (StateIndex s = 0; s < belief.size(); ++s) v += belief[s] * a.coeffs[s];
      best = std::max(best, v);
    }
    return best;
  }
};

struct SolverOptions {
  std::size_t alpha_cap = 50000;
  double reward_scale = 1.0;  // (1 - M c) transmission-time factor
};

namespace detail {

// s_a [eps f0 + (1-eps) f1] for one channel
inline double ack_success_factor(const SensorDesign& d) {
  return d.point.epsilon * d.rule.f0 + (1.0 - d.point.epsilon) * d.rule.f1;
}

// Factored observation kernel for a channel-set action:
// U(s, k) = prod_n [k_n u1_n(s) + (1-k_n)(1 - u1_n(s))], u1_n = s_n g_n.
struct ActionKernel {
  std::vector<int> channels;
  std::vector<double> g;       // per set position
  std::vector<double> b;       // bandwidth per set position
  std::size_t obs_count() const { return std::size_t{1} << channels.size(); }

  double u(StateIndex s, std::size_t k) const {
    double p = 1.0;
    for (std::size_t m = 0; m < channels.size(); ++m) {
      const double u1 = state_bit(s, channels[m]) ? g[m] : 0.0;
      p *= (k >> m) & 1u ? u1 : 1.0 - u1;
    }
    return p;
  }

  double reward(std::size_t k, double scale) const {
    double r = 0.0;
    for (std::size_t m = 0; m < channels.size(); ++m)
      if ((k >> m) & 1u) r += b[m];
    return scale * r;
  }
};

inline bool lex_less(const std::vector<int>& a, const std::vector<int>& b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double v = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) v += a[i] * b[i];
  return v;
}

// Lark's filter: keep exactly the vectors that are the unique maximum
// somewhere on the simplex (within slack).
inline std::vector<AlphaVector> prune_alpha_set(std::vector<AlphaVector> cand) {
  constexpr double tol = 1e-9;
  if (cand.empty()) return cand;
  const std::size_t ns = cand[0].coeffs.size();

  // stable action order makes tie-breaking deterministic
  std::sort(cand.begin(), cand.end(), [](const AlphaVector& a, const AlphaVector& b) {
    return lex_less(a.channels, b.channels);
  });

  // pointwise dedupe / dominance
  std::vector<AlphaVector> stage1;
  for (auto& a : cand) {
    bool dominated = false;
    for (const auto& b : stage1) {
      bool le = true;
      for (std::size_t s = 0; s < ns; ++s) {
        if (a.coeffs[s] > b.coeffs[s] + 1e-12) {
          le = false;
          break;
        }
      }
      if (le) {
        dominated = true;
        break;
      }
    }
    if (!dominated) stage1.push_back(std::move(a));
  }
  if (stage1.size() <= 1) return stage1;

  auto best_at = [&](const std::vector<AlphaVector*>& pool,
                     const std::vector<double>& belief) {
    std::size_t best = 0;
    double bv = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < pool.size(); ++i) {
      const double v = dot(pool[i]->coeffs, belief);
      if (v > bv + 1e-12) {
        bv = v;
        best = i;
      }
    }
    return best;
  };

  std::vector<AlphaVector*> pending;
  for (auto& a : stage1) pending.push_back(&a);
  std::vector<AlphaVector> kept;

  // seed with the winner at the first corner
  {
    std::vector<double> corner(ns, 0.0);
    corner[0] = 1.0;
    const std::size_t i = best_at(pending, corner);
    kept.push_back(*pending[i]);
    pending.erase(pending.begin() + i);
  }

  while (!pending.empty()) {
    AlphaVector* x = pending.front();
    // witness LP: max d s.t. lambda.(x - w) >= d for all kept w, lambda in simplex
    LpProblem lp;
    lp.objective.assign(ns + 1, 0.0);
    lp.objective[ns] = 1.0;
    lp.variable_bounds.assign(ns, {0.0, 1.0});
    lp.variable_bounds.push_back(
        {-std::numeric_limits<double>::infinity(),
         std::numeric_limits<double>::infinity()});
    for (const auto& w : kept) {
      LpConstraint c;
      c.coeffs.resize(ns + 1);
      for (std::size_t s = 0; s < ns; ++s) c.coeffs[s] = x->coeffs[s] - w.coeffs[s];
      c.coeffs[ns] = -1.0;
      c.relation = LpRelation::GreaterEq;
      c.bound = 0.0;
      lp.constraints.push_back(std::move(c));
    }
    {
      LpConstraint c;
      c.coeffs.assign(ns + 1, 1.0);
      c.coeffs[ns] = 0.0;
      c.relation = LpRelation::Equal;
      c.bound = 1.0;
      lp.constraints.push_back(std::move(c));
    }
    const LpResult r = lp_solve(lp);
    if (r.status != LpStatus::Optimal)
      throw std::runtime_error("prune_alpha_set: witness LP failed");
    if (r.objective_value <= tol) {
      pending.erase(pending.begin());
      continue;
    }
    std::vector<double> witness(r.solution.begin(), r.solution.begin() + ns);
    const std::size_t i = best_at(pending, witness);
    kept.push_back(*pending[i]);
    pending.erase(pending.begin() + i);
  }

  std::sort(kept.begin(), kept.end(), [](const AlphaVector& a, const AlphaVector& b) {
    return lex_less(a.channels, b.channels);
  });
  return kept;
}

}  // namespace detail

// A sensing policy: either the exact per-stage value functions or the myopic
// rule (argmax of expected instantaneous throughput).
class SensingPolicy {
 public:
  enum class Kind { Exact, Myopic };

  static SensingPolicy myopic(int channels_per_slot = 1) {
    SensingPolicy p;
    p.kind_ = Kind::Myopic;
    p.set_size_ = channels_per_slot;
    return p;
  }

  static SensingPolicy exact(std::vector<ValueFunction> stages) {
    if (stages.empty())
      throw std::invalid_argument("SensingPolicy: empty stage list");
    SensingPolicy p;
    p.kind_ = Kind::Exact;
    p.stages_ = std::move(stages);
    p.set_size_ = static_cast<int>(p.stages_[0].alphas.at(0).channels.size());
    return p;
  }

  Kind kind() const { return kind_; }
  int horizon() const { return static_cast<int>(stages_.size()); }
  int channels_per_slot() const { return set_size_; }
  const std::vector<ValueFunction>& stages() const { return stages_; }

  struct Decision {
    double value = 0.0;
    std::vector<int> channels;
  };

  // Choose the sensing action for the given belief at 1-based stage t.
  // Ties go to the lexicographically smallest channel set.
  Decision evaluate(const Belief& belief, const TransitionModel& model,
                    int stage) const {
    if (kind_ == Kind::Myopic) return myopic_decision(belief, model);
    if (stage < 1 || stage > horizon())
      throw std::out_of_range("SensingPolicy: stage out of range");
    const ValueFunction& vf = stages_[stage - 1];
    Decision d;
    d.value = -std::numeric_limits<double>::infinity();
    for (const auto& a : vf.alphas) {
      double v = 0.0;
      for (StateIndex s = 0; s < belief.size(); ++s) v += belief[s] * a.coeffs[s];
      if (v > d.value + 1e-12) {
        d.value = v;
        d.channels = a.channels;
      }
    }
    return d;
  }

 private:
  Decision myopic_decision(const Belief& belief, const TransitionModel& model) const {
    const Belief pred = predict(belief, model);
    const int n = model.num_channels();
    std::vector<double> score(n, 0.0);
    for (StateIndex s = 0; s < pred.size(); ++s) {
      for (int ch = 0; ch < n; ++ch)
        if (state_bit(s, ch)) score[ch] += pred[s];
    }
    for (int ch = 0; ch < n; ++ch) score[ch] *= model.bandwidth(ch);
    std::vector<int> order(n);
    for (int ch = 0; ch < n; ++ch) order[ch] = ch;
    // highest score first; ties to the lowest channel index
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return score[a] > score[b] + 0.0; });
    Decision d;
    d.channels.assign(order.begin(), order.begin() + set_size_);
    std::sort(d.channels.begin(), d.channels.end());
    for (int ch : d.channels) d.value += score[ch];
    return d;
  }

  Kind kind_ = Kind::Myopic;
  int set_size_ = 1;
  std::vector<ValueFunction> stages_;
};

// Exact finite-horizon solve of the unconstrained sensing POMDP by Monahan
// enumeration with pointwise + LP pruning. `actions` lists the candidate
// channel sets (defaults to all single channels).
inline SensingPolicy solve_exact(const TransitionModel& model,
                                 const std::vector<SensorDesign>& designs,
                                 int horizon,
                                 const SolverOptions& options = {},
                                 std::vector<std::vector<int>> actions = {}) {
  if (horizon < 1) throw std::invalid_argument("solve_exact: horizon must be >= 1");
  const int n = model.num_channels();
  if (static_cast<int>(designs.size()) != n)
    throw std::invalid_argument("solve_exact: one design per channel required");
  const std::size_t ns = model.num_states();
  if (actions.empty()) {
    for (int ch = 0; ch < n; ++ch) actions.push_back({ch});
  }
  std::vector<detail::ActionKernel> kernels;
  for (auto& set : actions) {
    std::sort(set.begin(), set.end());
    detail::ActionKernel k;
    k.channels = set;
    for (int ch : set) {
      if (ch < 0 || ch >= n) throw std::out_of_range("solve_exact: bad channel");
      k.g.push_back(detail::ack_success_factor(designs[ch]));
      k.b.push_back(model.bandwidth(ch));
    }
    kernels.push_back(std::move(k));
  }

  // transition rows P(s' -> s)
  std::vector<std::vector<double>> trans(ns, std::vector<double>(ns));
  for (StateIndex from = 0; from < ns; ++from)
    for (StateIndex to = 0; to < ns; ++to) trans[from][to] = model.prob(from, to);

  auto fold_transition = [&](const std::vector<double>& phi) {
    std::vector<double> out(ns, 0.0);
    for (StateIndex from = 0; from < ns; ++from)
      out[from] = detail::dot(trans[from], phi);
    return out;
  };

  std::vector<ValueFunction> stages(horizon);
  std::vector<AlphaVector> next;  // alpha set of stage t+1

  for (int t = horizon; t >= 1; --t) {
    std::vector<AlphaVector> built;
    for (const auto& k : kernels) {
      const std::size_t nobs = k.obs_count();
      if (t == horizon) {
        std::vector<double> phi(ns, 0.0);
        for (StateIndex s = 0; s < ns; ++s)
          for (std::size_t obs = 0; obs < nobs; ++obs)
            phi[s] += k.u(s, obs) * k.reward(obs, options.reward_scale);
        built.push_back({fold_transition(phi), k.channels});
        continue;
      }
      // incremental pruning: prune each observation's projected set, then
      // prune pairwise cross-sums so intermediate sets stay minimal
      std::vector<AlphaVector> acc;
      for (std::size_t obs = 0; obs < nobs; ++obs) {
        std::vector<AlphaVector> h;
        h.reserve(next.size());
        for (const auto& a : next) {
          std::vector<double> phi(ns);
          for (StateIndex s = 0; s < ns; ++s)
            phi[s] = k.u(s, obs) *
                     (k.reward(obs, options.reward_scale) + a.coeffs[s]);
          h.push_back({fold_transition(phi), k.channels});
        }
        h = detail::prune_alpha_set(std::move(h));
        if (obs == 0) {
          acc = std::move(h);
          continue;
        }
        if (acc.size() * h.size() > options.alpha_cap)
          throw std::runtime_error(
              "solve_exact: alpha-vector cap exceeded; consider the myopic policy");
        std::vector<AlphaVector> cross;
        cross.reserve(acc.size() * h.size());
        for (const auto& a : acc) {
          for (const auto& b : h) {
            AlphaVector c{a.coeffs, k.channels};
            for (StateIndex s = 0; s < ns; ++s) c.coeffs[s] += b.coeffs[s];
            cross.push_back(std::move(c));
          }
        }
        acc = detail::prune_alpha_set(std::move(cross));
      }
      for (auto& a : acc) built.push_back(std::move(a));
      if (built.size() > options.alpha_cap)
        throw std::runtime_error(
            "solve_exact: alpha-vector cap exceeded; consider the myopic policy");
    }
    next = detail::prune_alpha_set(std::move(built));
    stages[t - 1] = ValueFunction{t, next};
  }
  return SensingPolicy::exact(std::move(stages));
}

// Exact optimum by direct recursion on the belief tree; oracle for
// solve_exact on tiny instances.
inline double brute_force_value(const TransitionModel& model,
                                const std::vector<SensorDesign>& designs,
                                int horizon, const Belief& initial_belief,
                                const SolverOptions& options = {},
                                std::vector<std::vector<int>> actions = {}) {
  if (model.num_channels() > 3 || horizon > 4)
    throw std::invalid_argument("brute_force_value: size guard (N<=3, T<=4)");
  const int n = model.num_channels();
  if (actions.empty()) {
    for (int ch = 0; ch < n; ++ch) actions.push_back({ch});
  }
  std::vector<detail::ActionKernel> kernels;
  for (auto& set : actions) {
    std::sort(set.begin(), set.end());
    detail::ActionKernel k;
    k.channels = set;
    for (int ch : set) {
      k.g.push_back(detail::ack_success_factor(designs[ch]));
      k.b.push_back(model.bandwidth(ch));
    }
    kernels.push_back(std::move(k));
  }
  const std::size_t ns = model.num_states();

  std::function<double(const Belief&, int)> rec = [&](const Belief& belief,
                                                      int t) -> double {
    const Belief pred = predict(belief, model);
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& k : kernels) {
      double total = 0.0;
      for (std::size_t obs = 0; obs < k.obs_count(); ++obs) {
        double pk = 0.0;
        std::vector<double> post(ns, 0.0);
        for (StateIndex s = 0; s < ns; ++s) {
          const double w = pred[s] * k.u(s, obs);
          post[s] = w;
          pk += w;
        }
        if (pk < 1e-300) continue;
        total += pk * k.reward(obs, options.reward_scale);
        if (t < horizon) {
          for (auto& v : post) v /= pk;
          total += pk * rec(Belief(std::move(post)), t + 1);
        }
      }
      best = std::max(best, total);
    }
    return best;
  };
  return rec(initial_belief, 1);
}

// --- policy serialization -------------------------------------------------

inline void save_policy(const SensingPolicy& policy, std::ostream& os) {
  if (policy.kind() != SensingPolicy::Kind::Exact)
    throw std::invalid_argument("save_policy: only exact policies serialize");
  const auto& stages = policy.stages();
  const std::size_t ns = stages[0].alphas.at(0).coeffs.size();
  os << "osa-policy 1 " << stages.size() << ' ' << ns << '\n';
  os << std::setprecision(17);
  for (const auto& vf : stages) {
    for (const auto& a : vf.alphas) {
      os << vf.stage << ' ' << a.channels.size();
      for (int ch : a.channels) os << ' ' << ch;
      for (double c : a.coeffs) os << ' ' << c;
      os << '\n';
    }
  }
}

inline SensingPolicy load_policy(std::istream& is) {
  std::string magic;
  int version = 0;
  std::size_t horizon = 0, ns = 0;
  is >> magic >> version >> horizon >> ns;
  if (magic != "osa-policy" || version != 1 || horizon == 0 || ns == 0)
    throw std::runtime_error("load_policy: bad header");
  std::vector<ValueFunction> stages(horizon);
  for (std::size_t t = 0; t < horizon; ++t) stages[t].stage = static_cast<int>(t) + 1;
  int stage = 0;
  while (is >> stage) {
    if (stage < 1 || static_cast<std::size_t>(stage) > horizon)
      throw std::runtime_error("load_policy: stage out of range");
    std::size_t nch = 0;
    is >> nch;
    AlphaVector a;
    a.channels.resize(nch);
    for (auto& ch : a.channels) is >> ch;
    a.coeffs.resize(ns);
    for (auto& c : a.coeffs) is >> c;
    if (!is) throw std::runtime_error("load_policy: truncated record");
    stages[stage - 1].alphas.push_back(std::move(a));
  }
  for (const auto& vf : stages) {
    if (vf.alphas.empty()) throw std::runtime_error("load_policy: empty stage");
  }
  return SensingPolicy::exact(std::move(stages));
}

}  // namespace osa
