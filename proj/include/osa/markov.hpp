#pragma once

#include <cmath>
#include <cstddef>
#include <cstdlib>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace osa {

// Joint spectrum occupancy states are indexed as integers in [0, 2^N);
// bit n of the index is the state of channel n (1 = idle, 0 = busy).
using StateIndex = std::size_t;

inline int state_bit(StateIndex s, int channel) { return (s >> channel) & 1u; }

// Raised when an observation has (numerically) zero probability under the
// model used for belief tracking.
struct ZeroProbabilityObservation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Spectrum occupancy dynamics: either per-channel independent two-state
// chains (alpha: busy->idle, beta: idle->idle) or a full 2^N x 2^N
// row-stochastic matrix.
class TransitionModel {
 public:
  static constexpr int kMaxChannels = 12;

  static TransitionModel independent(std::vector<double> alpha,
                                     std::vector<double> beta,
                                     std::vector<double> bandwidths) {
    TransitionModel m;
    m.n_ = static_cast<int>(alpha.size());
    m.check_channel_count(m.n_);
    if (beta.size() != alpha.size() || bandwidths.size() != alpha.size())
      throw std::invalid_argument("TransitionModel: channel count mismatch");
    for (int i = 0; i < m.n_; ++i) {
      if (alpha[i] < 0 || alpha[i] > 1 || beta[i] < 0 || beta[i] > 1)
        throw std::invalid_argument("TransitionModel: alpha/beta out of [0,1]");
      if (bandwidths[i] <= 0)
        throw std::invalid_argument("TransitionModel: bandwidth must be > 0");
    }
    m.factored_ = true;
    m.alpha_ = std::move(alpha);
    m.beta_ = std::move(beta);
    m.bandwidths_ = std::move(bandwidths);
    return m;
  }

  static TransitionModel full(std::vector<std::vector<double>> matrix,
                              std::vector<double> bandwidths) {
    TransitionModel m;
    m.n_ = static_cast<int>(bandwidths.size());
    m.check_channel_count(m.n_);
    const std::size_t ns = std::size_t{1} << m.n_;
    if (matrix.size() != ns)
      throw std::invalid_argument("TransitionModel: matrix size mismatch");
    for (const auto& row : matrix) {
      if (row.size() != ns)
        throw std::invalid_argument("TransitionModel: matrix row size mismatch");
      double sum = 0.0;
      for (double p : row) {
        if (p < -1e-12 || p > 1.0 + 1e-12)
          throw std::invalid_argument("TransitionModel: entry out of [0,1]");
        sum += p;
      }
      if (std::fabs(sum - 1.0) > 1e-12)
        throw std::invalid_argument("TransitionModel: row does not sum to 1");
    }
    for (double b : bandwidths) {
      if (b <= 0) throw std::invalid_argument("TransitionModel: bandwidth must be > 0");
    }
    m.factored_ = false;
    m.matrix_ = std::move(matrix);
    m.bandwidths_ = std::move(bandwidths);
    return m;
  }

  int num_channels() const { return n_; }
  std::size_t num_states() const { return std::size_t{1} << n_; }
  bool factored() const { return factored_; }
  double bandwidth(int channel) const { return bandwidths_.at(channel); }
  const std::vector<double>& bandwidths() const { return bandwidths_; }
  double alpha(int channel) const { return alpha_.at(channel); }
  double beta(int channel) const { return beta_.at(channel); }

  double prob(StateIndex from, StateIndex to) const {
    if (!factored_) return matrix_[from][to];
    double p = 1.0;
    for (int ch = 0; ch < n_; ++ch) {
      const int a = state_bit(from, ch), b = state_bit(to, ch);
      p *= a ? (b ? beta_[ch] : 1.0 - beta_[ch])
             : (b ? alpha_[ch] : 1.0 - alpha_[ch]);
    }
    return p;
  }

  TransitionModel as_full() const {
    if (!factored_) return *this;
    const std::size_t ns = num_states();
    std::vector<std::vector<double>> mat(ns, std::vector<double>(ns));
    for (StateIndex i = 0; i < ns; ++i)
      for (StateIndex j = 0; j < ns; ++j) mat[i][j] = prob(i, j);
    return full(std::move(mat), bandwidths_);
  }

 private:
  static void check_channel_count(int n) {
    if (n < 1 || n > kMaxChannels)
      throw std::invalid_argument("TransitionModel: channel count out of range");
  }

  int n_ = 0;
  bool factored_ = true;
  std::vector<double> alpha_, beta_, bandwidths_;
  std::vector<std::vector<double>> matrix_;
};

// Probability mass over the 2^N joint occupancy states; the POMDP
// information state, held prior to the slot's state transition.
struct Belief {
  std::vector<double> mass;

  Belief() = default;
  explicit Belief(std::vector<double> m) : mass(std::move(m)) { normalize(); }

  static Belief uniform(std::size_t num_states) {
    return Belief(std::vector<double>(num_states, 1.0 / num_states));
  }
  static Belief point(std::size_t num_states, StateIndex s) {
    std::vector<double> m(num_states, 0.0);
    m[s] = 1.0;
    return Belief(std::move(m));
  }

  std::size_t size() const { return mass.size(); }
  double operator[](StateIndex s) const { return mass[s]; }

  void normalize() {
    double sum = 0.0;
    for (double v : mass) {
      if (v < -1e-12) throw std::invalid_argument("Belief: negative mass");
      sum += v;
    }
    if (sum < 1e-300) throw std::invalid_argument("Belief: zero total mass");
    for (auto& v : mass) v = std::max(v, 0.0) / sum;
  }
};

// Distribution of the state after the slot's Markov transition:
// out[s] = sum_{s'} lambda_{s'} P_{s',s}.
inline Belief predict(const Belief& belief, const TransitionModel& model) {
  const std::size_t ns = model.num_states();
  if (belief.size() != ns)
    throw std::invalid_argument("predict: dimension mismatch");
  std::vector<double> out(ns, 0.0);
  if (model.factored()) {
    // apply each channel's 2x2 kernel along its bit axis
    out = belief.mass;
    for (int ch = 0; ch < model.num_channels(); ++ch) {
      const double a = model.alpha(ch), b = model.beta(ch);
      const std::size_t bit = std::size_t{1} << ch;
      for (StateIndex s = 0; s < ns; ++s) {
        if (s & bit) continue;
        const double busy = out[s], idle = out[s | bit];
        out[s] = busy * (1.0 - a) + idle * (1.0 - b);
        out[s | bit] = busy * a + idle * b;
      }
    }
  } else {
    for (StateIndex from = 0; from < ns; ++from) {
      const double w = belief[from];
      if (w == 0.0) continue;
      for (StateIndex to = 0; to < ns; ++to) out[to] += w * model.prob(from, to);
    }
  }
  return Belief(std::move(out));
}

// Stationary distribution pi with pi P = pi. Factored models use the
// per-channel closed form; full matrices use damped power iteration.
inline Belief stationary(const TransitionModel& model) {
  const std::size_t ns = model.num_states();
  if (model.factored()) {
    std::vector<double> mass(ns, 1.0);
    for (int ch = 0; ch < model.num_channels(); ++ch) {
      const double a = model.alpha(ch), b = model.beta(ch);
      const double denom = a + 1.0 - b;
      // denom == 0 iff busy and idle are both absorbing (alpha=0, beta=1)
      if (denom <= 0.0)
        throw std::domain_error("stationary: channel chain is not ergodic");
      const double p_idle = a / denom;
      for (StateIndex s = 0; s < ns; ++s)
        mass[s] *= state_bit(s, ch) ? p_idle : 1.0 - p_idle;
    }
    return Belief(std::move(mass));
  }
  // Damped power iteration from several starting distributions. A unique
  // limit requires a single recurrent class; disagreeing limits (e.g. the
  // identity chain) or non-convergence report a non-ergodic chain.
  auto iterate = [&](Belief pi) {
    for (int it = 0; it < 100000; ++it) {
      Belief next = predict(pi, model);
      double diff = 0.0;
      for (StateIndex s = 0; s < ns; ++s)
        diff = std::max(diff, std::fabs(next[s] - pi[s]));
      // damping removes periodic oscillation without moving fixed points
      for (StateIndex s = 0; s < ns; ++s)
        pi.mass[s] = 0.5 * pi.mass[s] + 0.5 * next.mass[s];
      if (diff < 1e-14) break;
    }
    return pi;
  };
  const Belief pi = iterate(Belief::uniform(ns));
  for (const Belief& alt :
       {iterate(Belief::point(ns, 0)), iterate(Belief::point(ns, ns - 1))}) {
    for (StateIndex s = 0; s < ns; ++s)
      if (std::fabs(alt[s] - pi[s]) > 1e-9)
        throw std::domain_error(
            "stationary: chain has no unique stationary distribution");
  }
  const Belief check = predict(pi, model);
  for (StateIndex s = 0; s < ns; ++s) {
    if (std::fabs(check[s] - pi[s]) > 1e-10)
      throw std::domain_error("stationary: chain did not converge (non-ergodic?)");
  }
  return pi;
}

// Marginal idle probability of channel n after the transition.
inline double channel_idle_prob(const Belief& belief, const TransitionModel& model,
                                int channel) {
  if (channel < 0 || channel >= model.num_channels())
    throw std::out_of_range("channel_idle_prob: bad channel index");
  const Belief pred = predict(belief, model);
  double p = 0.0;
  for (StateIndex s = 0; s < pred.size(); ++s)
    if (state_bit(s, channel)) p += pred[s];
  return p;
}

// ACK likelihood for a single sensed channel:
//   U_{s,1} = s_a [eps f0 + (1 - eps) f1],  U_{s,0} = 1 - U_{s,1}.
inline double ack_likelihood(StateIndex s, int channel, double eps, double f0,
                             double f1, int ack) {
  const double u1 = state_bit(s, channel) ? eps * f0 + (1.0 - eps) * f1 : 0.0;
  return ack ? u1 : 1.0 - u1;
}

// Bayes update with an arbitrary per-state observation likelihood.
inline Belief bayes_update(const Belief& belief, const TransitionModel& model,
                           const std::function<double(StateIndex)>& likelihood) {
  Belief pred = predict(belief, model);
  double norm = 0.0;
  for (StateIndex s = 0; s < pred.size(); ++s) {
    pred.mass[s] *= likelihood(s);
    norm += pred.mass[s];
  }
  if (norm < 1e-300)
    throw ZeroProbabilityObservation("bayes_update: observation has zero probability");
  for (auto& v : pred.mass) v /= norm;
  return pred;
}

// Single-channel convenience overload: sense `channel` at PFA eps with
// access rule (f0, f1) and observe ACK k.
inline Belief bayes_update(const Belief& belief, const TransitionModel& model,
                           int channel, double eps, double f0, double f1,
                           int ack) {
  return bayes_update(belief, model, [&](StateIndex s) {
    return ack_likelihood(s, channel, eps, f0, f1, ack);
  });
}

}  // namespace osa
