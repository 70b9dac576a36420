#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

#include "osa/bisect.hpp"
#include "osa/gamma.hpp"
#include "osa/rng.hpp"

namespace osa {

// A sensor operating characteristic: PFA epsilon, PM delta.
struct OperatingPoint {
  double epsilon = 0.0;
  double delta = 0.0;
};

// Gaussian energy-detection setup for one channel: M i.i.d. measurements,
// noise power sigma0_sq, primary signal power sigma1_sq (both linear).
struct GaussianChannelParams {
  int samples = 1;        // M
  double sigma0_sq = 1.0;  // noise power
  double sigma1_sq = 1.0;  // primary signal power

  void validate() const {
    if (samples < 1 || sigma0_sq <= 0.0 || sigma1_sq <= 0.0)
      throw std::invalid_argument("GaussianChannelParams: invalid parameters");
  }
};

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

// Analytic (PFA, PM) of the energy detector ||Y||^2 >< eta:
//   delta = P(M/2, eta / (2 (sigma0^2 + sigma1^2)))
//   eps   = 1 - P(M/2, eta / (2 sigma0^2))
inline OperatingPoint energy_roc(const GaussianChannelParams& params, double eta) {
  params.validate();
  if (eta < 0.0) throw std::domain_error("energy_roc: eta must be >= 0");
  const double half_m = 0.5 * params.samples;
  const double delta =
      reg_gamma_lower(half_m, eta / (2.0 * (params.sigma0_sq + params.sigma1_sq)));
  const double eps = 1.0 - reg_gamma_lower(half_m, eta / (2.0 * params.sigma0_sq));
  return {eps, delta};
}

// Detection threshold achieving PM = target_pm (delta is increasing in eta).
inline double threshold_for_pm(const GaussianChannelParams& params,
                               double target_pm) {
  params.validate();
  if (!(target_pm > 0.0 && target_pm < 1.0))
    throw std::domain_error("threshold_for_pm: target_pm must be in (0,1)");
  double hi = 1.0;
  while (energy_roc(params, hi).delta < target_pm) {
    hi *= 2.0;
    if (hi > 1e12) throw std::runtime_error("threshold_for_pm: bracket failure");
  }
  return invert_monotone(
      [&](double eta) { return energy_roc(params, eta).delta; }, target_pm, 0.0,
      hi, 1e-13);
}

// Best ROC curve P_Dmax(eps): either the analytic energy-detector family or
// a user-supplied concave piecewise-linear frontier.
class RocCurve {
 public:
  struct Knot {
    double eps;
    double pd;
  };

  static RocCurve energy(const GaussianChannelParams& params) {
    params.validate();
    RocCurve c;
    c.is_energy_ = true;
    c.params_ = params;
    return c;
  }

  // Knots are closed under the upper concave hull; non-concave input is
  // hulled, not rejected. (0,0) and (1,1) are always part of the frontier.
  static RocCurve piecewise_linear(std::vector<Knot> knots) {
    RocCurve c;
    c.is_energy_ = false;
    knots.push_back({0.0, 0.0});
    knots.push_back({1.0, 1.0});
    for (const auto& k : knots) {
      if (k.eps < 0 || k.eps > 1 || k.pd < 0 || k.pd > 1)
        throw std::invalid_argument("RocCurve: knot out of [0,1]^2");
    }
    std::sort(knots.begin(), knots.end(), [](const Knot& a, const Knot& b) {
      return a.eps < b.eps || (a.eps == b.eps && a.pd < b.pd);
    });
    // upper concave hull (monotone chain)
    std::vector<Knot> hull;
    for (const auto& k : knots) {
      while (hull.size() >= 2) {
        const Knot& a = hull[hull.size() - 2];
        const Knot& b = hull[hull.size() - 1];
        const double cross =
            (b.eps - a.eps) * (k.pd - a.pd) - (b.pd - a.pd) * (k.eps - a.eps);
        if (cross >= 0.0)
          hull.pop_back();
        else
          break;
      }
      if (!hull.empty() && hull.back().eps == k.eps) {
        if (k.pd > hull.back().pd)
          hull.back() = k;
        continue;
      }
      hull.push_back(k);
    }
    c.knots_ = std::move(hull);
    return c;
  }

  bool is_energy() const { return is_energy_; }
  const GaussianChannelParams& energy_params() const {
    if (!is_energy_) throw std::logic_error("RocCurve: not an energy curve");
    return params_;
  }
  const std::vector<Knot>& knots() const { return knots_; }

  // Largest achievable detection probability at the given PFA.
  double pd_max(double eps) const {
    if (eps < 0.0 || eps > 1.0)
      throw std::domain_error("RocCurve::pd_max: eps out of [0,1]");
    if (is_energy_) {
      if (eps >= 1.0) return 1.0;
      if (eps <= 0.0) return 0.0;
      // invert eps(eta), decreasing in eta
      double hi = 1.0;
      while (energy_roc(params_, hi).epsilon > eps) hi *= 2.0;
      const double eta = invert_monotone(
          [&](double e) { return energy_roc(params_, e).epsilon; }, eps, 0.0, hi,
          1e-13);
      return 1.0 - energy_roc(params_, eta).delta;
    }
    for (std::size_t i = 1; i < knots_.size(); ++i) {
      if (eps <= knots_[i].eps) {
        const auto& a = knots_[i - 1];
        const auto& b = knots_[i];
        if (b.eps == a.eps) return b.pd;
        const double w = (eps - a.eps) / (b.eps - a.eps);
        return a.pd + w * (b.pd - a.pd);
      }
    }
    return knots_.back().pd;
  }

  // On-curve PFA at which the PM equals pm, i.e. P_Dmax(eps) = 1 - pm.
  double eps_for_pm(double pm) const {
    const double pd = 1.0 - pm;
    if (is_energy_) {
      const double eta = threshold_for_pm(params_, pm);
      return energy_roc(params_, eta).epsilon;
    }
    if (pd <= knots_.front().pd) return knots_.front().eps;
    for (std::size_t i = 1; i < knots_.size(); ++i) {
      if (pd <= knots_[i].pd) {
        const auto& a = knots_[i - 1];
        const auto& b = knots_[i];
        if (b.pd == a.pd) return a.eps;
        const double w = (pd - a.pd) / (b.pd - a.pd);
        return a.eps + w * (b.eps - a.eps);
      }
    }
    throw std::domain_error("RocCurve::eps_for_pm: PM not achievable");
  }

 private:
  bool is_energy_ = true;
  GaussianChannelParams params_{};
  std::vector<Knot> knots_;
};

// Recipe achieving the on-curve point at PFA eps by randomizing between two
// boundary NP detectors: use PFA eps_hi with probability p, eps_lo otherwise.
struct MixingRecipe {
  double eps_hi = 0.0;
  double eps_lo = 0.0;
  double p = 1.0;
};

inline MixingRecipe randomized_point(const RocCurve& curve, double eps) {
  if (eps < 0.0 || eps > 1.0)
    throw std::domain_error("randomized_point: eps out of [0,1]");
  if (curve.is_energy()) {
    // every point of the energy family is directly realizable
    return {eps, eps, 1.0};
  }
  const auto& knots = curve.knots();
  for (std::size_t i = 1; i < knots.size(); ++i) {
    if (eps <= knots[i].eps) {
      const double lo = knots[i - 1].eps;
      const double hi = knots[i].eps;
      if (eps == hi || hi == lo) return {hi, hi, 1.0};
      if (eps == lo) return {lo, lo, 1.0};
      return {hi, lo, (eps - lo) / (hi - lo)};
    }
  }
  return {knots.back().eps, knots.back().eps, 1.0};
}

// One sensing outcome draw from the (eps, delta) error model.
// Returns 1 (idle) or 0 (busy); true_state uses the same convention.
inline int sense_single(int true_state, const OperatingPoint& point,
                        RngStream& rng) {
  if (true_state) return rng.bernoulli(point.epsilon) ? 0 : 1;
  return rng.bernoulli(point.delta) ? 1 : 0;
}

// Conditional occupancy PMFs over {0,1}^L for a reference channel n in the
// sensed set: given_busy = h(.|S_n = 0), given_idle = h(.|S_n = 1).
// Patterns are indexed with bit j = occupancy of the j-th channel of the set.
struct ConditionalOccupancy {
  std::vector<double> given_busy;
  std::vector<double> given_idle;
  int ref_position = 0;  // position of channel n inside the sensed set
};

namespace detail {

// log density of M i.i.d. zero-mean Gaussian samples with variance v
inline double gaussian_log_density(const std::vector<double>& y, double v) {
  const double log2pi = 1.8378770664093454836;
  double e = 0.0;
  for (double s : y) e += s * s;
  return -0.5 * y.size() * (log2pi + std::log(v)) - e / (2.0 * v);
}

// per-joint-state log likelihood of all channel measurements
inline std::vector<double> joint_log_likelihoods(
    const std::vector<std::vector<double>>& measurements,
    const std::vector<GaussianChannelParams>& params) {
  const std::size_t set_size = measurements.size();
  if (params.size() != set_size)
    throw std::invalid_argument("composite_lrt: params/measurements mismatch");
  // cache per channel: log p(Y_m | busy), log p(Y_m | idle)
  std::vector<double> lp_busy(set_size), lp_idle(set_size);
  for (std::size_t m = 0; m < set_size; ++m) {
    params[m].validate();
    lp_idle[m] = gaussian_log_density(measurements[m], params[m].sigma0_sq);
    lp_busy[m] = gaussian_log_density(measurements[m],
                                      params[m].sigma0_sq + params[m].sigma1_sq);
  }
  const std::size_t patterns = std::size_t{1} << set_size;
  std::vector<double> out(patterns);
  for (std::size_t pat = 0; pat < patterns; ++pat) {
    double ll = 0.0;
    for (std::size_t m = 0; m < set_size; ++m)
      ll += (pat >> m) & 1u ? lp_idle[m] : lp_busy[m];
    out[pat] = ll;
  }
  return out;
}

// log of sum_pat prior[pat] * exp(ll[pat]); -inf if the mixture is empty
inline double log_mixture(const std::vector<double>& prior,
                          const std::vector<double>& ll, double ll_max) {
  double acc = 0.0;
  for (std::size_t pat = 0; pat < prior.size(); ++pat) {
    if (prior[pat] > 0.0) acc += prior[pat] * std::exp(ll[pat] - ll_max);
  }
  return acc > 0.0 ? std::log(acc) + ll_max
                   : -std::numeric_limits<double>::infinity();
}

}  // namespace detail

// Composite likelihood-ratio test for one channel of a sensed set, using the
// measurements of every channel and the belief-derived conditional occupancy.
// Declares busy (returns 0) iff LR >= tau; the ratio is computed in the log
// domain.
inline int composite_lrt(const std::vector<std::vector<double>>& measurements,
                         const ConditionalOccupancy& prior,
                         const std::vector<GaussianChannelParams>& params,
                         double tau) {
  if (tau < 0.0) throw std::domain_error("composite_lrt: tau must be >= 0");
  const std::vector<double> ll = detail::joint_log_likelihoods(measurements, params);
  if (prior.given_busy.size() != ll.size() || prior.given_idle.size() != ll.size())
    throw std::invalid_argument("composite_lrt: prior size mismatch");
  double sum0 = 0.0, sum1 = 0.0;
  for (double v : prior.given_busy) sum0 += v;
  for (double v : prior.given_idle) sum1 += v;
  if (sum0 < 1e-12 || sum1 < 1e-12)
    throw std::invalid_argument("composite_lrt: degenerate conditional prior");
  const double ll_max = *std::max_element(ll.begin(), ll.end());
  const double log_num = detail::log_mixture(prior.given_busy, ll, ll_max);
  const double log_den = detail::log_mixture(prior.given_idle, ll, ll_max);
  if (tau == 0.0) return 0;  // LR >= 0 always
  if (std::isinf(log_num) && log_num < 0) return 1;  // LR = 0 < tau
  return log_num - log_den >= std::log(tau) ? 0 : 1;
}

// log LR value itself (used by calibration)
inline double composite_log_lr(const std::vector<std::vector<double>>& measurements,
                               const ConditionalOccupancy& prior,
                               const std::vector<GaussianChannelParams>& params) {
  const std::vector<double> ll = detail::joint_log_likelihoods(measurements, params);
  const double ll_max = *std::max_element(ll.begin(), ll.end());
  return detail::log_mixture(prior.given_busy, ll, ll_max) -
         detail::log_mixture(prior.given_idle, ll, ll_max);
}

struct CompositeCalibration {
  double tau = 0.0;       // detection threshold achieving PM ~= target
  double pfa = 0.0;       // Monte Carlo PFA estimate at tau
  double pm = 0.0;        // Monte Carlo PM estimate at tau
};

// Monte Carlo calibration of the composite detector threshold so that the
// PM equals target_pm under the given conditional occupancy. A fixed sample
// set per call keeps the result reproducible for a given rng state.
inline CompositeCalibration calibrate_composite(
    const ConditionalOccupancy& prior,
    const std::vector<GaussianChannelParams>& params, double target_pm,
    std::size_t trials, RngStream& rng) {
  if (trials < 10000)
    throw std::invalid_argument("calibrate_composite: need >= 1e4 trials");
  if (!(target_pm > 0.0 && target_pm < 1.0))
    throw std::invalid_argument("calibrate_composite: target_pm out of (0,1)");
  const std::size_t set_size = params.size();
  const std::size_t patterns = std::size_t{1} << set_size;
  if (prior.given_busy.size() != patterns || prior.given_idle.size() != patterns)
    throw std::invalid_argument("calibrate_composite: prior size mismatch");

  auto draw_pattern = [&](const std::vector<double>& pmf) {
    double u = rng.uniform();
    for (std::size_t pat = 0; pat < pmf.size(); ++pat) {
      u -= pmf[pat];
      if (u < 0.0) return pat;
    }
    return pmf.size() - 1;
  };
  auto draw_log_lr = [&](const std::vector<double>& pmf) {
    const std::size_t pat = draw_pattern(pmf);
    std::vector<std::vector<double>> y(set_size);
    for (std::size_t m = 0; m < set_size; ++m) {
      const double v = (pat >> m) & 1u
                           ? params[m].sigma0_sq
                           : params[m].sigma0_sq + params[m].sigma1_sq;
      const double sd = std::sqrt(v);
      y[m].resize(params[m].samples);
      for (auto& s : y[m]) s = sd * rng.normal();
    }
    return composite_log_lr(y, prior, params);
  };

  std::vector<double> busy_lr(trials);
  for (auto& v : busy_lr) v = draw_log_lr(prior.given_busy);
  std::sort(busy_lr.begin(), busy_lr.end());
  const std::size_t idx = static_cast<std::size_t>(target_pm * trials);
  if (idx >= trials)
    throw std::runtime_error("calibrate_composite: target PM unreachable");
  const double log_tau = busy_lr[idx];

  CompositeCalibration cal;
  cal.tau = std::exp(log_tau);
  std::size_t miss = 0;
  for (double v : busy_lr)
    if (v < log_tau) ++miss;
  cal.pm = static_cast<double>(miss) / trials;
  std::size_t fa = 0;
  for (std::size_t i = 0; i < trials; ++i)
    if (draw_log_lr(prior.given_idle) >= log_tau) ++fa;
  cal.pfa = static_cast<double>(fa) / trials;
  return cal;
}

}  // namespace osa
