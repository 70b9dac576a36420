#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <iomanip>
#include <mutex>
#include <ostream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "osa/config.hpp"
#include "osa/markov.hpp"
#include "osa/multichannel.hpp"
#include "osa/pomdp.hpp"
#include "osa/rng.hpp"
#include "osa/sensor.hpp"
#include "osa/separation.hpp"

namespace osa {

struct SlotTrace {
  int t = 0;
  StateIndex true_state = 0;
  std::vector<int> chosen;     // channel ids, sorted
  std::vector<int> theta;      // sensing outcome per chosen position (1 = idle)
  std::vector<int> phi;        // transmit decision per chosen position
  std::vector<int> ack;        // K_n = S_n Phi_n
  std::vector<int> collision;  // Phi_n = 1 on a busy channel
  double reward = 0.0;
};

struct Metrics {
  std::size_t trials = 0;
  int horizon = 0;
  double total_reward = 0.0;
  double total_reward_sq = 0.0;  // sum of squared per-episode rewards
  std::vector<std::int64_t> collisions;       // per channel
  std::vector<std::int64_t> busy_access_opps; // per channel: chosen & busy slots
  std::vector<std::int64_t> fa, idle_sensed;  // per slot (1-based index t-1)
  std::vector<std::int64_t> miss, busy_sensed;
  double max_belief_divergence = 0.0;
  std::size_t zero_prob_resets = 0;

  void init(int num_channels, int T) {
    horizon = T;
    collisions.assign(num_channels, 0);
    busy_access_opps.assign(num_channels, 0);
    fa.assign(T, 0);
    idle_sensed.assign(T, 0);
    miss.assign(T, 0);
    busy_sensed.assign(T, 0);
  }

  void merge(const Metrics& o) {
    trials += o.trials;
    total_reward += o.total_reward;
    total_reward_sq += o.total_reward_sq;
    for (std::size_t i = 0; i < collisions.size(); ++i) {
      collisions[i] += o.collisions[i];
      busy_access_opps[i] += o.busy_access_opps[i];
    }
    for (int t = 0; t < horizon; ++t) {
      fa[t] += o.fa[t];
      idle_sensed[t] += o.idle_sensed[t];
      miss[t] += o.miss[t];
      busy_sensed[t] += o.busy_sensed[t];
    }
    max_belief_divergence = std::max(max_belief_divergence, o.max_belief_divergence);
    zero_prob_resets += o.zero_prob_resets;
  }

  // reward per slot, averaged over episodes
  double normalized_throughput() const {
    return total_reward / (static_cast<double>(trials) * horizon);
  }
  // standard error of the per-slot throughput estimate
  double throughput_stderr() const {
    const double n = static_cast<double>(trials);
    const double mean = total_reward / n;
    const double var = std::max(0.0, total_reward_sq / n - mean * mean);
    return std::sqrt(var / n) / horizon;
  }

  double collision_rate(int ch) const {
    return busy_access_opps[ch] == 0
               ? 0.0
               : static_cast<double>(collisions[ch]) / busy_access_opps[ch];
  }
  // binomial std dev of the collision estimate at rate p0
  double collision_sigma(int ch, double p0) const {
    return busy_access_opps[ch] == 0
               ? 0.0
               : std::sqrt(p0 * (1.0 - p0) / busy_access_opps[ch]);
  }
  double pooled_collision_rate() const {
    std::int64_t num = 0, den = 0;
    for (std::size_t i = 0; i < collisions.size(); ++i) {
      num += collisions[i];
      den += busy_access_opps[i];
    }
    return den == 0 ? 0.0 : static_cast<double>(num) / den;
  }
  std::int64_t pooled_busy_opps() const {
    std::int64_t den = 0;
    for (auto v : busy_access_opps) den += v;
    return den;
  }

  double pfa_at(int t) const {  // Pr{sensor says busy | idle}, slot t (1-based)
    return idle_sensed[t - 1] == 0
               ? 0.0
               : static_cast<double>(fa[t - 1]) / idle_sensed[t - 1];
  }
  double pm_at(int t) const {
    return busy_sensed[t - 1] == 0
               ? 0.0
               : static_cast<double>(miss[t - 1]) / busy_sensed[t - 1];
  }
};

// Everything needed to simulate one configuration point.
struct SimSetup {
  TransitionModel true_model;
  TransitionModel assumed_model;
  GaussianChannelParams detector;
  Strategy strategy = Strategy::SeparationExact;
  int horizon = 10;
  double zeta = 0.05;
  double reward_scale = 1.0;  // (1 - M c)
  int set_size = 1;
  bool uniform_initial_belief = false;
  std::size_t phy_calib_trials = 20000;
  // delta-sweep override: force this design on every channel instead of the
  // separation-optimal one
  bool use_design_override = false;
  SensorDesign design_override;
};

namespace detail {

inline StateIndex sample_state(const std::vector<double>& pmf, RngStream& rng) {
  double u = rng.uniform();
  for (StateIndex s = 0; s + 1 < pmf.size(); ++s) {
    u -= pmf[s];
    if (u < 0.0) return s;
  }
  return pmf.size() - 1;
}

inline StateIndex sample_transition(const TransitionModel& model, StateIndex from,
                                    RngStream& rng) {
  double u = rng.uniform();
  const std::size_t ns = model.num_states();
  for (StateIndex to = 0; to + 1 < ns; ++to) {
    u -= model.prob(from, to);
    if (u < 0.0) return to;
  }
  return ns - 1;
}

inline std::vector<std::vector<int>> channel_subsets(int n, int l) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur;
  std::function<void(int)> rec = [&](int start) {
    if (static_cast<int>(cur.size()) == l) {
      out.push_back(cur);
      return;
    }
    for (int ch = start; ch < n; ++ch) {
      cur.push_back(ch);
      rec(ch + 1);
      cur.pop_back();
    }
  };
  rec(0);
  return out;
}

}  // namespace detail

// One simulation context: immutable after construction except the PHY
// calibration cache; build one per thread.
class Simulator {
 public:
  explicit Simulator(SimSetup setup)
      : s_(std::move(setup)),
        curve_(RocCurve::energy(s_.detector)),
        calibrator_(std::vector<GaussianChannelParams>(s_.set_size, s_.detector),
                    s_.zeta, s_.phy_calib_trials) {
    s_.detector.validate();
    CollisionBudget{s_.zeta}.validate();
    if (s_.true_model.num_channels() != s_.assumed_model.num_channels())
      throw std::invalid_argument("Simulator: model channel counts differ");
    const int n = s_.true_model.num_channels();
    if (s_.set_size > n)
      throw std::invalid_argument("Simulator: set_size exceeds channel count");

    const SensorDesign base = s_.use_design_override
                                  ? s_.design_override
                                  : optimal_design(curve_, s_.zeta);
    designs_.assign(n, base);
    eta_ = threshold_for_pm(s_.detector, s_.zeta);

    SolverOptions opt;
    opt.reward_scale = s_.reward_scale;
    if (s_.strategy == Strategy::SeparationExact) {
      std::vector<std::vector<int>> actions;
      if (s_.set_size > 1)
        actions = detail::channel_subsets(n, s_.set_size);
      policy_ = solve_exact(s_.assumed_model, designs_, s_.horizon, opt,
                            std::move(actions));
    } else {
      policy_ = SensingPolicy::myopic(s_.set_size);
    }

    initial_belief_ = s_.uniform_initial_belief
                          ? Belief::uniform(s_.assumed_model.num_states())
                          : stationary(s_.assumed_model);
    true_initial_ = stationary(s_.true_model);
  }

  const SensingPolicy& policy() const { return policy_; }
  const std::vector<SensorDesign>& designs() const { return designs_; }
  const SimSetup& setup() const { return s_; }

  std::vector<SlotTrace> run_episode(RngStream& rng, Metrics* metrics = nullptr) {
    const int n = s_.true_model.num_channels();
    Belief belief = initial_belief_;
    Belief shadow = initial_belief_;
    StateIndex state = detail::sample_state(true_initial_.mass, rng);
    std::vector<SlotTrace> traces;
    traces.reserve(s_.horizon);
    double divergence = 0.0;
    std::size_t resets = 0;

    for (int t = 1; t <= s_.horizon; ++t) {
      state = detail::sample_transition(s_.true_model, state, rng);
      const SensingPolicy::Decision decision =
          policy_.evaluate(belief, s_.assumed_model, t);
      const ChannelSet set = ChannelSet::of(decision.channels, n);
      const int L = set.size();

      SlotTrace trace;
      trace.t = t;
      trace.true_state = state;
      trace.chosen = set.channels;
      trace.theta.assign(L, 0);
      trace.phi.assign(L, 0);
      trace.ack.assign(L, 0);
      trace.collision.assign(L, 0);

      // sensing + access: tracking points/rule feed the belief update; the
      // PHY composite bank supplies its joint ACK kernel instead, because
      // its decisions are correlated across channels
      std::vector<OperatingPoint> track_points(L);
      JointAccessRule track_rule = JointAccessRule::threshold(L);
      std::vector<std::vector<double>> phy_kernel;
      std::size_t theta_pat = 0;
      if (s_.strategy == Strategy::SeparationExact ||
          s_.strategy == Strategy::SeparationMyopic) {
        for (int m = 0; m < L; ++m) {
          const SensorDesign& d = designs_[set.channels[m]];
          trace.theta[m] = sense_single(state_bit(state, set.channels[m]),
                                        d.point, rng);
          track_points[m] = d.point;
          if (trace.theta[m]) theta_pat |= std::size_t{1} << m;
        }
        for (int m = 0; m < L; ++m) {
          const SensorDesign& d = designs_[set.channels[m]];
          const double f = trace.theta[m] ? d.rule.f1 : d.rule.f0;
          for (std::size_t pat = 0; pat < set.patterns(); ++pat)
            track_rule.at(m, pat) = ((pat >> m) & 1u) ? d.rule.f1 : d.rule.f0;
          trace.phi[m] = draw_access(f, rng);
        }
      } else {
        // Gaussian measurements, shared by sp/phy/mac under a common stream
        std::vector<std::vector<double>> y(L);
        for (int m = 0; m < L; ++m) {
          const double v = state_bit(state, set.channels[m])
                               ? s_.detector.sigma0_sq
                               : s_.detector.sigma0_sq + s_.detector.sigma1_sq;
          const double sd = std::sqrt(v);
          y[m].resize(s_.detector.samples);
          for (auto& sample : y[m]) sample = sd * rng.normal();
        }
        if (s_.strategy == Strategy::Phy) {
          PhyDecision d =
              phy_strategy_step(belief, s_.assumed_model, set, calibrator_, y);
          for (int m = 0; m < L; ++m) {
            trace.theta[m] = d.theta[m];
            trace.phi[m] = d.access[m];
            track_points[m] = {d.pfa[m], d.pm[m]};
            if (trace.theta[m]) theta_pat |= std::size_t{1} << m;
          }
          phy_kernel = std::move(d.ack_kernel);
        } else {
          for (int m = 0; m < L; ++m) {
            double energy = 0.0;
            for (double sample : y[m]) energy += sample * sample;
            trace.theta[m] = energy < eta_ ? 1 : 0;
            track_points[m] = designs_[set.channels[m]].point;
            if (trace.theta[m]) theta_pat |= std::size_t{1} << m;
          }
          if (s_.strategy == Strategy::Mac) {
            track_rule = mac_lp_access(belief, s_.assumed_model, set,
                                       track_points, s_.zeta)
                             .rule;
            for (int m = 0; m < L; ++m)
              trace.phi[m] = draw_access(track_rule.at(m, theta_pat), rng);
          } else {  // sp
            for (int m = 0; m < L; ++m) trace.phi[m] = trace.theta[m];
          }
        }
      }

      std::size_t ack_pat = 0;
      for (int m = 0; m < L; ++m) {
        const int sm = state_bit(state, set.channels[m]);
        trace.ack[m] = sm & trace.phi[m];
        trace.collision[m] = trace.phi[m] & (1 - sm);
        if (trace.ack[m]) {
          ack_pat |= std::size_t{1} << m;
          trace.reward +=
              s_.reward_scale * s_.true_model.bandwidth(set.channels[m]);
        }
      }

      // transmitter-side belief from (action, K); the shadow copy replays the
      // same update through the generic joint kernel
      auto likelihood = [&](StateIndex sos) {
        if (!phy_kernel.empty()) {
          std::size_t s_pat = 0;
          for (int m = 0; m < L; ++m)
            s_pat |= std::size_t(state_bit(sos, set.channels[m])) << m;
          return phy_kernel[s_pat][ack_pat];
        }
        return joint_observation_kernel(sos, set, track_points, track_rule,
                                        ack_pat);
      };
      try {
        Belief next = bayes_update(belief, s_.assumed_model, likelihood);
        Belief shadow_next = bayes_update(shadow, s_.assumed_model, likelihood);
        for (StateIndex sos = 0; sos < next.size(); ++sos)
          divergence = std::max(divergence,
                                std::fabs(next[sos] - shadow_next[sos]));
        belief = std::move(next);
        shadow = std::move(shadow_next);
      } catch (const ZeroProbabilityObservation&) {
        ++resets;
        belief = initial_belief_;
        shadow = initial_belief_;
      }
      traces.push_back(std::move(trace));
    }

    if (metrics) {
      metrics->trials += 1;
      double ep_reward = 0.0;
      for (const auto& trace : traces) {
        ep_reward += trace.reward;
        for (std::size_t m = 0; m < trace.chosen.size(); ++m) {
          const int ch = trace.chosen[m];
          const int idle = state_bit(trace.true_state, ch);
          if (idle) {
            metrics->idle_sensed[trace.t - 1] += 1;
            if (!trace.theta[m]) metrics->fa[trace.t - 1] += 1;
          } else {
            metrics->busy_sensed[trace.t - 1] += 1;
            if (trace.theta[m]) metrics->miss[trace.t - 1] += 1;
            metrics->busy_access_opps[ch] += 1;
            if (trace.collision[m]) metrics->collisions[ch] += 1;
          }
        }
      }
      metrics->total_reward += ep_reward;
      metrics->total_reward_sq += ep_reward * ep_reward;
      metrics->max_belief_divergence =
          std::max(metrics->max_belief_divergence, divergence);
      metrics->zero_prob_resets += resets;
    }
    return traces;
  }

 private:
  static int draw_access(double f, RngStream& rng) {
    if (f >= 1.0) return 1;
    if (f <= 0.0) return 0;
    return rng.bernoulli(f) ? 1 : 0;
  }

  SimSetup s_;
  RocCurve curve_;
  PhyCalibrator calibrator_;
  std::vector<SensorDesign> designs_;
  double eta_ = 0.0;
  SensingPolicy policy_;
  Belief initial_belief_, true_initial_;
};

inline int sim_thread_count() {
  if (const char* env = std::getenv("OSA_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

// Monte Carlo average over `trials` episodes with disjoint RNG streams.
// Trial i always uses RngStream(seed, i + 1), and double-valued reductions
// run in trial order, so the result is independent of the thread count.
inline Metrics run_point(const SimSetup& setup, std::size_t trials,
                         std::uint64_t seed) {
  if (trials < 1) throw std::invalid_argument("run_point: trials must be >= 1");
  const int nthreads =
      static_cast<int>(std::min<std::size_t>(sim_thread_count(), trials));
  std::vector<Metrics> per_trial(trials);
  std::vector<std::thread> workers;
  std::vector<std::exception_ptr> errors(nthreads);
  for (int w = 0; w < nthreads; ++w) {
    workers.emplace_back([&, w] {
      try {
        Simulator sim(setup);
        for (std::size_t i = w; i < trials; i += nthreads) {
          per_trial[i].init(setup.true_model.num_channels(), setup.horizon);
          RngStream rng(seed, i + 1);
          sim.run_episode(rng, &per_trial[i]);
        }
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& th : workers) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  Metrics total;
  total.init(setup.true_model.num_channels(), setup.horizon);
  for (const auto& m : per_trial) total.merge(m);
  return total;
}

// --- experiment runner ----------------------------------------------------

namespace detail {

inline void csv_num(std::ostream& os, double v) {
  os << std::setprecision(17) << v;
}

}  // namespace detail

inline SimSetup setup_from_config(const ExperimentConfig& cfg) {
  TransitionModel true_model = cfg.model.build();
  TransitionModel assumed =
      cfg.run.psi != 0.0 ? perturbed_model(true_model, cfg.run.psi) : true_model;
  SimSetup s{std::move(true_model), std::move(assumed), cfg.detector.build(),
             cfg.run.strategy};
  s.horizon = cfg.run.horizon;
  s.zeta = cfg.run.zeta;
  s.reward_scale = 1.0 - cfg.detector.samples * cfg.run.c;
  s.set_size = cfg.run.set_size;
  s.uniform_initial_belief = cfg.run.uniform_initial_belief;
  return s;
}

// Runs the configured sweep, writing one CSV row per point, and returns the
// metrics of the last point. CSV values are printed at 17 significant digits.
inline Metrics run_experiment(const ExperimentConfig& cfg, std::ostream& csv) {
  const auto emit_common = [&](const Metrics& m) {
    csv << ',';
    detail::csv_num(csv, m.normalized_throughput());
    csv << ',';
    detail::csv_num(csv, m.throughput_stderr());
    csv << ',';
    detail::csv_num(csv, m.pooled_collision_rate());
    csv << ',' << m.pooled_busy_opps() << '\n';
  };

  Metrics last;
  switch (cfg.sweep.kind) {
    case SweepSpec::Kind::None: {
      csv << "strategy,throughput,stderr,collision_rate,busy_opps\n";
      const Metrics m = run_point(setup_from_config(cfg), cfg.run.trials,
                                  cfg.run.seed);
      csv << strategy_name(cfg.run.strategy);
      emit_common(m);
      last = m;
      break;
    }
    case SweepSpec::Kind::Delta: {
      csv << "delta,f0,f1,throughput,stderr,collision_rate,busy_opps\n";
      const RocCurve curve = RocCurve::energy(cfg.detector.build());
      for (double delta : cfg.sweep.values) {
        SimSetup s = setup_from_config(cfg);
        s.use_design_override = true;
        s.design_override.point = {curve.eps_for_pm(delta), delta};
        s.design_override.rule = optimal_access_given_delta(delta, cfg.run.zeta);
        const Metrics m = run_point(s, cfg.run.trials, cfg.run.seed);
        detail::csv_num(csv, delta);
        csv << ',';
        detail::csv_num(csv, s.design_override.rule.f0);
        csv << ',';
        detail::csv_num(csv, s.design_override.rule.f1);
        emit_common(m);
        last = m;
      }
      break;
    }
    case SweepSpec::Kind::Samples: {
      csv << "zeta,samples,throughput,stderr,collision_rate,busy_opps\n";
      std::vector<double> zetas = cfg.sweep.zetas;
      if (zetas.empty()) zetas.push_back(cfg.run.zeta);
      for (double zeta : zetas) {
        for (double mval : cfg.sweep.values) {
          ExperimentConfig point = cfg;
          point.run.zeta = zeta;
          point.detector.samples = static_cast<int>(mval);
          const Metrics m = run_point(setup_from_config(point), cfg.run.trials,
                                      cfg.run.seed);
          detail::csv_num(csv, zeta);
          csv << ',' << static_cast<int>(mval);
          emit_common(m);
          last = m;
        }
      }
      break;
    }
    case SweepSpec::Kind::Psi: {
      csv << "psi,throughput,stderr,throughput_loss,collision_rate,busy_opps\n";
      ExperimentConfig base = cfg;
      base.run.psi = 0.0;
      const Metrics m0 = run_point(setup_from_config(base), cfg.run.trials,
                                   cfg.run.seed);
      const double t0 = m0.normalized_throughput();
      for (double psi : cfg.sweep.values) {
        ExperimentConfig point = cfg;
        point.run.psi = psi;
        const Metrics m = run_point(setup_from_config(point), cfg.run.trials,
                                    cfg.run.seed);
        detail::csv_num(csv, psi);
        csv << ',';
        detail::csv_num(csv, m.normalized_throughput());
        csv << ',';
        detail::csv_num(csv, m.throughput_stderr());
        csv << ',';
        detail::csv_num(csv, (t0 - m.normalized_throughput()) / t0);
        csv << ',';
        detail::csv_num(csv, m.pooled_collision_rate());
        csv << ',' << m.pooled_busy_opps() << '\n';
        last = m;
      }
      break;
    }
    case SweepSpec::Kind::StrategyCompare: {
      csv << "strategy,throughput,stderr,collision_rate,busy_opps\n";
      for (Strategy st : {Strategy::Sp, Strategy::Mac, Strategy::Phy}) {
        ExperimentConfig point = cfg;
        point.run.strategy = st;
        const Metrics m = run_point(setup_from_config(point), cfg.run.trials,
                                    cfg.run.seed);
        csv << strategy_name(st);
        emit_common(m);
        last = m;
      }
      break;
    }
  }
  return last;
}

// Per-slot detector operating estimates (Fig. 8-style tracking).
inline void write_detector_track(const Metrics& m, std::ostream& csv,
                                 double analytic_eps) {
  csv << "t,pfa,pm,pfa_sp_analytic\n";
  for (int t = 1; t <= m.horizon; ++t) {
    csv << t << ',';
    detail::csv_num(csv, m.pfa_at(t));
    csv << ',';
    detail::csv_num(csv, m.pm_at(t));
    csv << ',';
    detail::csv_num(csv, analytic_eps);
    csv << '\n';
  }
}

}  // namespace osa
