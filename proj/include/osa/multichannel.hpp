#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

#include "osa/lp.hpp"
#include "osa/markov.hpp"
#include "osa/pomdp.hpp"
#include "osa/sensor.hpp"
#include "osa/separation.hpp"

namespace osa {

// Sorted set of L distinct channels sensed in one slot.
struct ChannelSet {
  std::vector<int> channels;

  static ChannelSet of(std::vector<int> chs, int num_channels) {
    std::sort(chs.begin(), chs.end());
    if (chs.empty())
      throw std::invalid_argument("ChannelSet: empty");
    if (static_cast<int>(chs.size()) > num_channels)
      throw std::invalid_argument("ChannelSet: more channels than the model has");
    for (std::size_t i = 0; i < chs.size(); ++i) {
      if (chs[i] < 0 || chs[i] >= num_channels)
        throw std::invalid_argument("ChannelSet: channel id out of range");
      if (i > 0 && chs[i] == chs[i - 1])
        throw std::invalid_argument("ChannelSet: duplicate channel");
    }
    return ChannelSet{std::move(chs)};
  }

  int size() const { return static_cast<int>(channels.size()); }
  std::size_t patterns() const { return std::size_t{1} << channels.size(); }
  int position_of(int channel) const {
    for (std::size_t i = 0; i < channels.size(); ++i)
      if (channels[i] == channel) return static_cast<int>(i);
    throw std::out_of_range("ChannelSet: channel not in set");
  }
};

// Transmit probabilities f_n(theta) for every channel n of the set and every
// L-bit sensing-outcome pattern theta (bit m = outcome of set position m,
// 1 = sensed idle).
struct JointAccessRule {
  int set_size = 0;
  std::vector<double> table;  // channel-major, theta-minor: table[n * 2^L + theta]

  static JointAccessRule zeros(int set_size) {
    JointAccessRule r;
    r.set_size = set_size;
    r.table.assign(std::size_t(set_size) << set_size, 0.0);
    return r;
  }

  // trust-the-sensor rule f_n(theta) = theta_n
  static JointAccessRule threshold(int set_size) {
    JointAccessRule r = zeros(set_size);
    for (int n = 0; n < set_size; ++n)
      for (std::size_t theta = 0; theta < (std::size_t{1} << set_size); ++theta)
        if ((theta >> n) & 1u) r.at(n, theta) = 1.0;
    return r;
  }

  double& at(int pos, std::size_t theta) {
    return table[(std::size_t(pos) << set_size) + theta];
  }
  double at(int pos, std::size_t theta) const {
    return table[(std::size_t(pos) << set_size) + theta];
  }

  void validate() const {
    if (table.size() != (std::size_t(set_size) << set_size))
      throw std::invalid_argument("JointAccessRule: table size mismatch");
    for (double f : table)
      if (f < -1e-12 || f > 1.0 + 1e-12)
        throw std::invalid_argument("JointAccessRule: entry out of [0,1]");
  }
};

// Probability the L detectors output pattern theta given occupancy pattern s
// (independent sensing at the given per-position operating points).
inline double outcome_likelihood(const std::vector<OperatingPoint>& points,
                                 std::size_t s, std::size_t theta) {
  double p = 1.0;
  for (std::size_t m = 0; m < points.size(); ++m) {
    const bool idle = (s >> m) & 1u;
    const bool said_idle = (theta >> m) & 1u;
    p *= idle ? (said_idle ? 1.0 - points[m].epsilon : points[m].epsilon)
              : (said_idle ? points[m].delta : 1.0 - points[m].delta);
  }
  return p;
}

// Predicted PMF over the occupancy patterns of the chosen channels
// (bit m = occupancy of set position m, 1 = idle).
inline std::vector<double> hypothesis_priors(const Belief& belief,
                                             const TransitionModel& model,
                                             const ChannelSet& set) {
  const Belief pred = predict(belief, model);
  std::vector<double> pmf(set.patterns(), 0.0);
  for (StateIndex s = 0; s < pred.size(); ++s) {
    std::size_t pat = 0;
    for (int m = 0; m < set.size(); ++m)
      pat |= std::size_t(state_bit(s, set.channels[m])) << m;
    pmf[pat] += pred[s];
  }
  return pmf;
}

// h(s | S_n = i) computed directly from a pattern PMF.
inline ConditionalOccupancy conditional_from_pmf(const std::vector<double>& pmf,
                                                 int pos) {
  ConditionalOccupancy h;
  h.ref_position = pos;
  h.given_busy.assign(pmf.size(), 0.0);
  h.given_idle.assign(pmf.size(), 0.0);
  double p_busy = 0.0, p_idle = 0.0;
  for (std::size_t pat = 0; pat < pmf.size(); ++pat) {
    if ((pat >> pos) & 1u) {
      h.given_idle[pat] = pmf[pat];
      p_idle += pmf[pat];
    } else {
      h.given_busy[pat] = pmf[pat];
      p_busy += pmf[pat];
    }
  }
  if (p_busy < 1e-12 || p_idle < 1e-12)
    throw std::domain_error(
        "conditional_occupancy: conditioning on a (near) zero-probability event");
  for (auto& v : h.given_busy) v /= p_busy;
  for (auto& v : h.given_idle) v /= p_idle;
  return h;
}

// h(s | S_n = i): occupancy-pattern PMFs conditioned on the reference
// channel's state.
inline ConditionalOccupancy conditional_occupancy(const Belief& belief,
                                                  const TransitionModel& model,
                                                  const ChannelSet& set,
                                                  int channel) {
  return conditional_from_pmf(hypothesis_priors(belief, model, set),
                              set.position_of(channel));
}

// Independent per-channel design: each channel gets its own PM = zeta
// operating point and the (0,1) access rule.
inline std::vector<SensorDesign> sp_strategy(const ChannelSet& set, double zeta,
                                             const std::vector<RocCurve>& curves) {
  if (curves.size() != static_cast<std::size_t>(set.size()))
    throw std::invalid_argument("sp_strategy: one curve per set channel required");
  std::vector<SensorDesign> designs;
  designs.reserve(curves.size());
  for (const auto& curve : curves) designs.push_back(optimal_design(curve, zeta));
  return designs;
}

// ACK-pattern likelihood given the joint occupancy state:
//   U(s, k) = sum_theta l(theta | s_A) prod_m [k_m s_m f_m(theta)
//                                              + (1 - k_m)(1 - s_m f_m(theta))]
inline double joint_observation_kernel(StateIndex state, const ChannelSet& set,
                                       const std::vector<OperatingPoint>& points,
                                       const JointAccessRule& rule,
                                       std::size_t ack_pattern) {
  if (points.size() != static_cast<std::size_t>(set.size()) ||
      rule.set_size != set.size())
    throw std::invalid_argument("joint_observation_kernel: dimension mismatch");
  std::size_t s_pat = 0;
  for (int m = 0; m < set.size(); ++m)
    s_pat |= std::size_t(state_bit(state, set.channels[m])) << m;
  double total = 0.0;
  for (std::size_t theta = 0; theta < set.patterns(); ++theta) {
    const double l = outcome_likelihood(points, s_pat, theta);
    if (l == 0.0) continue;
    double p = 1.0;
    for (int m = 0; m < set.size(); ++m) {
      const double sf = ((s_pat >> m) & 1u) ? rule.at(m, theta) : 0.0;
      p *= ((ack_pattern >> m) & 1u) ? sf : 1.0 - sf;
    }
    total += l * p;
  }
  return total;
}

// Expected immediate reward sum_n B_n sum_{s,theta} g(s) 1[s_n idle]
// l(theta|s) f_n(theta) of an access rule at the current belief.
inline double access_objective(const Belief& belief, const TransitionModel& model,
                               const ChannelSet& set,
                               const std::vector<OperatingPoint>& points,
                               const JointAccessRule& rule) {
  rule.validate();
  const std::vector<double> pmf = hypothesis_priors(belief, model, set);
  double obj = 0.0;
  for (std::size_t s = 0; s < pmf.size(); ++s) {
    if (pmf[s] == 0.0) continue;
    for (std::size_t theta = 0; theta < pmf.size(); ++theta) {
      const double w = pmf[s] * outcome_likelihood(points, s, theta);
      if (w == 0.0) continue;
      for (int m = 0; m < set.size(); ++m) {
        if ((s >> m) & 1u)
          obj += model.bandwidth(set.channels[m]) * w * rule.at(m, theta);
      }
    }
  }
  return obj;
}

struct MacAccessResult {
  JointAccessRule rule;
  double objective = 0.0;
};

// Jointly optimized transmission probabilities: maximize the expected
// immediate reward subject to per-channel conditional collision <= zeta.
// Variables are ordered channel-major, theta-pattern-minor, so the returned
// vertex is deterministic under Bland's rule.
inline MacAccessResult mac_lp_access(const Belief& belief,
                                     const TransitionModel& model,
                                     const ChannelSet& set,
                                     const std::vector<OperatingPoint>& points,
                                     double zeta) {
  CollisionBudget{zeta}.validate();
  if (points.size() != static_cast<std::size_t>(set.size()))
    throw std::invalid_argument("mac_lp_access: one operating point per channel");
  const std::vector<double> pmf = hypothesis_priors(belief, model, set);
  const std::size_t np = pmf.size();
  const int L = set.size();
  const std::size_t nvars = std::size_t(L) * np;

  // joint weights w(s,theta) = g(s) l(theta|s)
  std::vector<std::vector<double>> w(np, std::vector<double>(np, 0.0));
  for (std::size_t s = 0; s < np; ++s) {
    if (pmf[s] == 0.0) continue;
    for (std::size_t theta = 0; theta < np; ++theta)
      w[s][theta] = pmf[s] * outcome_likelihood(points, s, theta);
  }

  LpProblem lp;
  lp.objective.assign(nvars, 0.0);
  lp.variable_bounds.assign(nvars, {0.0, 1.0});
  auto var = [&](int n, std::size_t theta) { return std::size_t(n) * np + theta; };
  for (int n = 0; n < L; ++n) {
    const double bn = model.bandwidth(set.channels[n]);
    LpConstraint collide;  // Pr{transmit, S_n busy} <= zeta Pr{S_n busy}
    collide.coeffs.assign(nvars, 0.0);
    collide.relation = LpRelation::LessEq;
    double p_busy = 0.0;
    for (std::size_t s = 0; s < np; ++s) {
      const bool idle = (s >> n) & 1u;
      if (!idle) p_busy += pmf[s];
      for (std::size_t theta = 0; theta < np; ++theta) {
        if (idle)
          lp.objective[var(n, theta)] += bn * w[s][theta];
        else
          collide.coeffs[var(n, theta)] += w[s][theta];
      }
    }
    collide.bound = zeta * p_busy;
    lp.constraints.push_back(std::move(collide));
  }

  const LpResult res = lp_solve(lp);
  if (res.status != LpStatus::Optimal)
    throw std::runtime_error("mac_lp_access: LP solve failed");

  MacAccessResult out;
  out.rule = JointAccessRule::zeros(L);
  for (int n = 0; n < L; ++n)
    for (std::size_t theta = 0; theta < np; ++theta)
      out.rule.at(n, theta) = std::clamp(res.solution[var(n, theta)], 0.0, 1.0);
  out.objective = res.objective_value;
  return out;
}

namespace detail {

// marginal PMF over the non-reference positions of a conditional PMF
inline std::vector<double> marginal_without(const std::vector<double>& pmf,
                                            int pos) {
  std::vector<double> out(pmf.size() >> 1, 0.0);
  for (std::size_t pat = 0; pat < pmf.size(); ++pat) {
    const std::size_t low = pat & ((std::size_t{1} << pos) - 1);
    const std::size_t rest = (pat >> (pos + 1)) << pos;
    out[low | rest] += pmf[pat];
  }
  return out;
}

inline bool factorizes(const ConditionalOccupancy& h) {
  const auto mb = marginal_without(h.given_busy, h.ref_position);
  const auto mi = marginal_without(h.given_idle, h.ref_position);
  for (std::size_t i = 0; i < mb.size(); ++i)
    if (std::fabs(mb[i] - mi[i]) > 1e-12) return false;
  return true;
}

// Per-position detection mode chosen from the pattern PMF: the composite LRT
// is only needed when the conditional occupancy carries cross-channel
// information; otherwise the analytic energy test is exact.
enum class PhyMode { Composite, Analytic, Degenerate };

struct PhyModes {
  std::vector<PhyMode> mode;
  std::vector<int> forced;  // theta for degenerate positions
  bool any_composite = false;
};

inline PhyModes phy_modes(const std::vector<double>& pmf, int set_size) {
  PhyModes out;
  out.mode.assign(set_size, PhyMode::Analytic);
  out.forced.assign(set_size, 0);
  for (int m = 0; m < set_size; ++m) {
    double p_idle = 0.0;
    for (std::size_t pat = 0; pat < pmf.size(); ++pat)
      if ((pat >> m) & 1u) p_idle += pmf[pat];
    if (p_idle <= 1e-12 || p_idle >= 1.0 - 1e-12) {
      out.mode[m] = PhyMode::Degenerate;
      out.forced[m] = p_idle >= 0.5 ? 1 : 0;
    } else if (!factorizes(conditional_from_pmf(pmf, m))) {
      out.mode[m] = PhyMode::Composite;
      out.any_composite = true;
    }
  }
  return out;
}

inline std::uint64_t fnv1a(const std::vector<std::int64_t>& key) {
  std::uint64_t h = 1469598103934665603ull;
  for (std::int64_t v : key) {
    for (int b = 0; b < 8; ++b) {
      h ^= (static_cast<std::uint64_t>(v) >> (8 * b)) & 0xffu;
      h *= 1099511628211ull;
    }
  }
  return h;
}

}  // namespace detail

// Calibrated state of the whole detector bank for one pattern prior: the
// per-position composite thresholds plus the Monte Carlo estimate of the
// joint ACK-pattern distribution P(K | occupancy pattern). The joint kernel
// matters because all composite tests share the same measurement vectors, so
// their decisions are correlated and pattern-dependent; a factorized ACK
// likelihood would bias the belief update.
struct PhyBank {
  std::vector<detail::PhyMode> mode;
  std::vector<int> forced;                 // theta for degenerate positions
  std::vector<double> eta;                 // analytic thresholds
  std::vector<double> log_tau;             // composite thresholds (log domain)
  std::vector<ConditionalOccupancy> prior; // composite conditional priors
  std::vector<OperatingPoint> points;      // per-position tracking estimates
  // ack_kernel[s_pat][k_pat] = Pr{ACK pattern k | occupancy pattern s}
  std::vector<std::vector<double>> ack_kernel;
};

// Threshold calibration for the composite detector bank, memoized on the
// pattern prior quantized to a 1e-3 grid; recalibration therefore happens
// only when the prior moves by more than total variation ~1e-3. The
// calibration RNG is seeded from the quantized key so results do not depend
// on lookup order.
class PhyCalibrator {
 public:
  PhyCalibrator(std::vector<GaussianChannelParams> params, double zeta,
                std::size_t trials = 20000, std::uint64_t seed = 1)
      : params_(std::move(params)), zeta_(zeta), trials_(trials), seed_(seed) {
    CollisionBudget{zeta}.validate();
  }

  const std::vector<GaussianChannelParams>& params() const { return params_; }
  double zeta() const { return zeta_; }

  const CompositeCalibration& get(const ConditionalOccupancy& prior) {
    std::vector<std::int64_t> key;
    key.push_back(prior.ref_position);
    for (double v : prior.given_busy)
      key.push_back(static_cast<std::int64_t>(std::llround(v * 1000.0)));
    for (double v : prior.given_idle)
      key.push_back(static_cast<std::int64_t>(std::llround(v * 1000.0)));
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    RngStream rng(seed_ ^ detail::fnv1a(key), 0);
    CompositeCalibration cal =
        calibrate_composite(prior, params_, zeta_, trials_, rng);
    return cache_.emplace(std::move(key), cal).first->second;
  }

  const PhyBank& bank(const std::vector<double>& pmf,
                      const detail::PhyModes& modes) {
    const int L = static_cast<int>(params_.size());
    std::vector<std::int64_t> key;
    for (int m = 0; m < L; ++m) {
      key.push_back(static_cast<std::int64_t>(modes.mode[m]));
      key.push_back(modes.forced[m]);
    }
    for (double v : pmf)
      key.push_back(static_cast<std::int64_t>(std::llround(v * 1000.0)));
    auto it = bank_cache_.find(key);
    if (it != bank_cache_.end()) return it->second;
    RngStream rng(seed_ ^ detail::fnv1a(key), 0);

    // calibrate against the quantized prior so the cached bank is a pure
    // function of the key, not of whichever exact prior arrived first
    std::vector<double> qpmf(pmf.size());
    for (std::size_t i = 0; i < pmf.size(); ++i)
      qpmf[i] = std::llround(pmf[i] * 1000.0) / 1000.0;
    for (int m = 0; m < L; ++m) {
      if (modes.mode[m] != detail::PhyMode::Composite) continue;
      double p_idle = 0.0, p_busy = 0.0;
      for (std::size_t pat = 0; pat < qpmf.size(); ++pat)
        ((pat >> m) & 1u ? p_idle : p_busy) += qpmf[pat];
      if (p_idle < 1e-12 || p_busy < 1e-12) {
        // quantization collapsed one branch; keep the exact prior instead
        qpmf = pmf;
        break;
      }
    }

    PhyBank bk;
    bk.mode = modes.mode;
    bk.forced = modes.forced;
    bk.eta.assign(L, 0.0);
    bk.log_tau.assign(L, 0.0);
    bk.prior.assign(L, {});
    bk.points.assign(L, {});
    for (int m = 0; m < L; ++m) {
      if (modes.mode[m] == detail::PhyMode::Analytic) {
        bk.eta[m] = threshold_for_pm(params_[m], zeta_);
        bk.points[m] = energy_roc(params_[m], bk.eta[m]);
      } else if (modes.mode[m] == detail::PhyMode::Composite) {
        bk.prior[m] = conditional_from_pmf(qpmf, m);
      }
    }

    // One draw ensemble per occupancy pattern, shared by everything: each
    // draw's joint likelihood vector is exponentiated once and reused for
    // every composite channel's log-LR; the thresholds are weighted
    // quantiles over the same ensemble (PM = zeta under the busy-conditional
    // prior) and the ACK kernel is a replay of its decisions.
    const std::size_t np = std::size_t{1} << L;
    const std::size_t n = trials_;
    std::vector<std::vector<std::vector<double>>> lr(
        np, std::vector<std::vector<double>>(L));
    std::vector<std::vector<std::size_t>> fixed_bits(
        np, std::vector<std::size_t>(n, 0));
    const double log2pi = 1.8378770664093454836;
    std::vector<double> c_idle(L), c_busy(L);  // density normalizations
    for (int m = 0; m < L; ++m) {
      const double v0 = params_[m].sigma0_sq;
      const double v1 = v0 + params_[m].sigma1_sq;
      c_idle[m] = -0.5 * params_[m].samples * (log2pi + std::log(v0));
      c_busy[m] = -0.5 * params_[m].samples * (log2pi + std::log(v1));
    }
    std::vector<double> lp_idle(L), lp_busy(L), ll(np), w(np);
    for (std::size_t s_pat = 0; s_pat < np; ++s_pat) {
      for (int m = 0; m < L; ++m)
        if (modes.mode[m] == detail::PhyMode::Composite) lr[s_pat][m].resize(n);
      for (std::size_t trial = 0; trial < n; ++trial) {
        std::size_t bits = 0;
        for (int m = 0; m < L; ++m) {
          const double v0 = params_[m].sigma0_sq;
          const double v1 = v0 + params_[m].sigma1_sq;
          const double sd = std::sqrt((s_pat >> m) & 1u ? v0 : v1);
          double energy = 0.0;
          for (int k = 0; k < params_[m].samples; ++k) {
            const double sample = sd * rng.normal();
            energy += sample * sample;
          }
          lp_idle[m] = c_idle[m] - energy / (2.0 * v0);
          lp_busy[m] = c_busy[m] - energy / (2.0 * v1);
          if (modes.mode[m] == detail::PhyMode::Degenerate) {
            if (modes.forced[m]) bits |= std::size_t{1} << m;
          } else if (modes.mode[m] == detail::PhyMode::Analytic) {
            if (energy < bk.eta[m]) bits |= std::size_t{1} << m;
          }
        }
        double ll_max = -std::numeric_limits<double>::infinity();
        for (std::size_t pat = 0; pat < np; ++pat) {
          double v = 0.0;
          for (int m = 0; m < L; ++m)
            v += (pat >> m) & 1u ? lp_idle[m] : lp_busy[m];
          ll[pat] = v;
          ll_max = std::max(ll_max, v);
        }
        for (std::size_t pat = 0; pat < np; ++pat)
          w[pat] = std::exp(ll[pat] - ll_max);
        fixed_bits[s_pat][trial] = bits;
        for (int m = 0; m < L; ++m) {
          if (modes.mode[m] != detail::PhyMode::Composite) continue;
          double num = 0.0, den = 0.0;
          for (std::size_t pat = 0; pat < np; ++pat) {
            num += bk.prior[m].given_busy[pat] * w[pat];
            den += bk.prior[m].given_idle[pat] * w[pat];
          }
          lr[s_pat][m][trial] = std::log(num) - std::log(den);
        }
      }
    }

    // thresholds: largest log tau with Pr{log LR < log tau | busy} <= zeta
    for (int m = 0; m < L; ++m) {
      if (modes.mode[m] != detail::PhyMode::Composite) continue;
      std::vector<std::pair<double, double>> samples;  // (log LR, weight)
      samples.reserve(np * n);
      for (std::size_t s_pat = 0; s_pat < np; ++s_pat) {
        const double wgt = bk.prior[m].given_busy[s_pat] / n;
        if (wgt <= 0.0) continue;
        for (std::size_t trial = 0; trial < n; ++trial)
          samples.push_back({lr[s_pat][m][trial], wgt});
      }
      std::sort(samples.begin(), samples.end());
      double cum = 0.0, log_tau = samples.front().first;
      for (const auto& [v, wgt] : samples) {
        if (cum + wgt > zeta_) {
          log_tau = v;
          break;
        }
        cum += wgt;
      }
      bk.log_tau[m] = log_tau;
      bk.points[m].delta = cum;  // realized PM estimate
    }

    // replay the decisions: ACK kernel and per-channel PFA estimates
    bk.ack_kernel.assign(np, std::vector<double>(np, 0.0));
    std::vector<std::vector<double>> say_busy(L, std::vector<double>(np, 0.0));
    for (std::size_t s_pat = 0; s_pat < np; ++s_pat) {
      for (std::size_t trial = 0; trial < n; ++trial) {
        std::size_t bits = fixed_bits[s_pat][trial];
        for (int m = 0; m < L; ++m) {
          if (modes.mode[m] != detail::PhyMode::Composite) continue;
          if (lr[s_pat][m][trial] < bk.log_tau[m])
            bits |= std::size_t{1} << m;
        }
        for (int m = 0; m < L; ++m)
          if (!((bits >> m) & 1u)) say_busy[m][s_pat] += 1.0;
        bk.ack_kernel[s_pat][bits & s_pat] += 1.0;
      }
      for (auto& v : bk.ack_kernel[s_pat]) v /= static_cast<double>(n);
    }
    for (int m = 0; m < L; ++m) {
      if (modes.mode[m] != detail::PhyMode::Composite) continue;
      double pfa = 0.0;
      for (std::size_t s_pat = 0; s_pat < np; ++s_pat)
        pfa += bk.prior[m].given_idle[s_pat] * say_busy[m][s_pat] / n;
      bk.points[m].epsilon = pfa;
    }
    return bank_cache_.emplace(std::move(key), std::move(bk)).first->second;
  }

 private:
  std::vector<GaussianChannelParams> params_;
  double zeta_;
  std::size_t trials_;
  std::uint64_t seed_;
  std::map<std::vector<std::int64_t>, CompositeCalibration> cache_;
  std::map<std::vector<std::int64_t>, PhyBank> bank_cache_;
};

struct PhyDecision {
  std::vector<int> theta;       // per set position, 1 = sensed idle
  std::vector<int> access;      // Phi_n = Theta_n
  std::vector<double> pfa;      // operating PFA used for belief tracking
  std::vector<double> pm;       // operating PM used for belief tracking
  // joint ACK kernel of the calibrated bank, indexed [s_pat][k_pat]; empty
  // when no composite test was used, in which case the factorized
  // per-channel kernel at (pfa, pm) is exact
  std::vector<std::vector<double>> ack_kernel;
};

// One slot of the composite-LRT strategy: for each chosen channel, test
// H0 "busy" vs H1 "idle" using all L measurement vectors and the
// belief-derived conditional occupancy, at PM = zeta.
//
// When the conditional occupancy factorizes (independent channels) the
// composite LR is monotone in the channel's own energy, so the test reduces
// exactly to the per-channel energy detector at its analytic threshold;
// that path avoids Monte Carlo calibration noise.
inline PhyDecision phy_strategy_step(
    const Belief& belief, const TransitionModel& model, const ChannelSet& set,
    PhyCalibrator& calibrator,
    const std::vector<std::vector<double>>& measurements) {
  const auto& params = calibrator.params();
  if (params.size() != static_cast<std::size_t>(set.size()) ||
      measurements.size() != params.size())
    throw std::invalid_argument("phy_strategy_step: dimension mismatch");
  const double zeta = calibrator.zeta();
  const std::vector<double> pmf = hypothesis_priors(belief, model, set);
  const detail::PhyModes modes = detail::phy_modes(pmf, set.size());

  PhyDecision d;
  d.theta.assign(set.size(), 0);
  d.access.assign(set.size(), 0);
  d.pfa.assign(set.size(), 0.0);
  d.pm.assign(set.size(), 0.0);
  const PhyBank* bank =
      modes.any_composite ? &calibrator.bank(pmf, modes) : nullptr;
  for (int m = 0; m < set.size(); ++m) {
    switch (modes.mode[m]) {
      case detail::PhyMode::Degenerate:
        // the belief already determines the channel's state
        d.theta[m] = modes.forced[m];
        break;
      case detail::PhyMode::Analytic: {
        const double eta =
            bank ? bank->eta[m] : threshold_for_pm(params[m], zeta);
        double energy = 0.0;
        for (double y : measurements[m]) energy += y * y;
        d.theta[m] = energy < eta ? 1 : 0;
        const OperatingPoint op =
            bank ? bank->points[m] : energy_roc(params[m], eta);
        d.pfa[m] = op.epsilon;
        d.pm[m] = op.delta;
        break;
      }
      case detail::PhyMode::Composite: {
        const double lr =
            composite_log_lr(measurements, bank->prior[m], params);
        d.theta[m] = lr >= bank->log_tau[m] ? 0 : 1;
        d.pfa[m] = bank->points[m].epsilon;
        d.pm[m] = bank->points[m].delta;
        break;
      }
    }
    d.access[m] = d.theta[m];
  }
  if (bank) d.ack_kernel = bank->ack_kernel;
  return d;
}

}  // namespace osa
