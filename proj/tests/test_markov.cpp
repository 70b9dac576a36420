#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "osa/markov.hpp"
#include "osa/rng.hpp"

using namespace osa;

namespace {

TransitionModel identity_model(int n) {
  const std::size_t ns = std::size_t{1} << n;
  std::vector<std::vector<double>> mat(ns, std::vector<double>(ns, 0.0));
  for (StateIndex s = 0; s < ns; ++s) mat[s][s] = 1.0;
  return TransitionModel::full(std::move(mat), std::vector<double>(n, 1.0));
}

}  // namespace

TEST_CASE("predict basics") {
  const TransitionModel id2 = identity_model(2);
  const Belief u = Belief::uniform(4);
  const Belief pu = predict(u, id2);
  for (StateIndex s = 0; s < 4; ++s) CHECK(pu[s] == Catch::Approx(0.25));

  const TransitionModel m = TransitionModel::independent({0.2, 0.4}, {0.8, 0.6},
                                                         {1.0, 1.0});
  const Belief point = Belief::point(4, 2);
  const Belief row = predict(point, m);
  for (StateIndex s = 0; s < 4; ++s)
    CHECK(row[s] == Catch::Approx(m.prob(2, s)).margin(1e-15));

  const TransitionModel m1 = TransitionModel::independent({0.2}, {0.8}, {1.0});
  const Belief b1(std::vector<double>{0.5, 0.5});
  const Belief p1 = predict(b1, m1);
  CHECK(p1[1] == Catch::Approx(0.5).margin(1e-15));  // 0.5*0.2 + 0.5*0.8
  CHECK(p1[0] == Catch::Approx(0.5).margin(1e-15));
}

TEST_CASE("predict dimension mismatch") {
  const TransitionModel m1 = TransitionModel::independent({0.2}, {0.8}, {1.0});
  CHECK_THROWS(predict(Belief::uniform(4), m1));
}

TEST_CASE("stationary closed forms") {
  auto idle = [](double a, double b) {
    const TransitionModel m = TransitionModel::independent({a}, {b}, {1.0});
    return stationary(m)[1];
  };
  CHECK(idle(0.2, 0.8) == Catch::Approx(0.5).margin(1e-12));
  CHECK(idle(0.5, 0.5) == Catch::Approx(0.5).margin(1e-12));
  CHECK(idle(0.2, 0.6) == Catch::Approx(1.0 / 3.0).margin(1e-12));
}

TEST_CASE("stationary of a full matrix agrees with the factored closed form") {
  const TransitionModel m = TransitionModel::independent({0.2, 0.4}, {0.8, 0.6},
                                                         {1.0, 1.0});
  const Belief pf = stationary(m);
  const Belief pm = stationary(m.as_full());
  for (StateIndex s = 0; s < 4; ++s)
    CHECK(pm[s] == Catch::Approx(pf[s]).margin(1e-9));
  // fixed point check
  const Belief step = predict(pm, m);
  for (StateIndex s = 0; s < 4; ++s)
    CHECK(step[s] == Catch::Approx(pm[s]).margin(1e-10));
}

TEST_CASE("stationary rejects non-ergodic chains") {
  CHECK_THROWS(stationary(TransitionModel::independent({0.0}, {1.0}, {1.0})));
  CHECK_THROWS(stationary(identity_model(1)));
}

TEST_CASE("channel_idle_prob") {
  const TransitionModel id2 = identity_model(2);
  CHECK(channel_idle_prob(Belief::point(4, 3), id2, 0) == Catch::Approx(1.0));
  CHECK(channel_idle_prob(Belief::uniform(4), id2, 1) == Catch::Approx(0.5));
  const TransitionModel m = TransitionModel::independent({0.2, 0.4}, {0.8, 0.6},
                                                         {1.0, 1.0});
  const Belief pi = stationary(m);
  CHECK(channel_idle_prob(pi, m, 0) == Catch::Approx(0.5).margin(1e-12));
  CHECK(channel_idle_prob(pi, m, 1) == Catch::Approx(0.5).margin(1e-12));
  CHECK_THROWS(channel_idle_prob(pi, m, 2));
}

TEST_CASE("bayes_update single-channel examples") {
  const TransitionModel id1 = identity_model(1);
  const Belief half(std::vector<double>{0.5, 0.5});

  // ack received: posterior is supported on idle regardless of operating point
  const Belief up1 = bayes_update(half, id1, 0, 0.8145, 0.0, 1.0, 1);
  CHECK(up1[1] == Catch::Approx(1.0).margin(1e-12));

  // perfect sensing, no ack: busy for sure
  const Belief up0 = bayes_update(half, id1, 0, 0.0, 0.0, 1.0, 0);
  CHECK(up0[0] == Catch::Approx(1.0).margin(1e-12));

  // eps = 0.2, rule (0,1), K = 0
  const Belief up = bayes_update(half, id1, 0, 0.2, 0.0, 1.0, 0);
  CHECK(up[0] == Catch::Approx(0.5 / 0.6).margin(1e-12));
  CHECK(up[1] == Catch::Approx(0.1 / 0.6).margin(1e-12));
}

TEST_CASE("bayes_update rejects zero-probability observations") {
  const TransitionModel id1 = identity_model(1);
  // belief certain busy, but an ack arrives
  CHECK_THROWS_AS(
      bayes_update(Belief::point(2, 0), id1, 0, 0.1, 0.0, 1.0, 1),
      ZeroProbabilityObservation);
}

TEST_CASE("posterior after an ack is operating-point independent") {
  RngStream rng(7, 0);
  const TransitionModel m = TransitionModel::independent({0.2, 0.4}, {0.8, 0.6},
                                                         {1.0, 1.0});
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> mass(4);
    for (auto& v : mass) v = 0.05 + rng.uniform();
    const Belief b(mass);
    const int ch = static_cast<int>(rng.below(2));
    const Belief a = bayes_update(b, m, ch, rng.uniform(), rng.uniform() * 0.5,
                                  0.5 + 0.5 * rng.uniform(), 1);
    const Belief c = bayes_update(b, m, ch, rng.uniform(), rng.uniform() * 0.5,
                                  0.5 + 0.5 * rng.uniform(), 1);
    for (StateIndex s = 0; s < 4; ++s)
      CHECK(a[s] == Catch::Approx(c[s]).margin(1e-12));
  }
}

TEST_CASE("no-ack posterior is a mixture of ack and alternate-point posteriors") {
  // T(b | A, 0) = tau T(b | A, 1) + (1 - tau) T(b | A', 0) where A and A'
  // sense the same channel at different operating points and
  // tau = [Pr{K=0 | A} - Pr{K=0 | A'}] / Pr{K=0 | A}.
  RngStream rng(11, 0);
  const TransitionModel m = TransitionModel::independent({0.3, 0.6}, {0.7, 0.5},
                                                         {1.0, 1.0});
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> mass(4);
    for (auto& v : mass) v = 0.05 + rng.uniform();
    const Belief b(mass);
    const int ch = static_cast<int>(rng.below(2));
    const double e1 = 0.6 * rng.uniform(), e2 = 0.6 * rng.uniform();
    const double g1 = e1 * 0.1 + (1 - e1) * 0.9;  // rule (0.1, 0.9)
    const double g2 = e2 * 0.2 + (1 - e2) * 0.8;  // rule (0.2, 0.8)
    const Belief pred = predict(b, m);
    double q = 0.0;
    for (StateIndex s = 0; s < 4; ++s)
      if (state_bit(s, ch)) q += pred[s];
    const double p0a = 1.0 - g1 * q, p0b = 1.0 - g2 * q;
    const double tau = (p0a - p0b) / p0a;
    const Belief t_a0 = bayes_update(b, m, ch, e1, 0.1, 0.9, 0);
    const Belief t_a1 = bayes_update(b, m, ch, e1, 0.1, 0.9, 1);
    const Belief t_b0 = bayes_update(b, m, ch, e2, 0.2, 0.8, 0);
    for (StateIndex s = 0; s < 4; ++s)
      CHECK(t_a0[s] ==
            Catch::Approx(tau * t_a1[s] + (1.0 - tau) * t_b0[s]).margin(1e-9));
  }
}

TEST_CASE("factored and full models agree") {
  RngStream rng(23, 0);
  const TransitionModel f = TransitionModel::independent(
      {0.15, 0.45, 0.75}, {0.85, 0.55, 0.35}, {1.0, 2.0, 0.5});
  const TransitionModel full = f.as_full();
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> mass(8);
    for (auto& v : mass) v = rng.uniform();
    const Belief b(mass);
    const Belief pf = predict(b, f);
    const Belief pm = predict(b, full);
    for (StateIndex s = 0; s < 8; ++s)
      CHECK(pf[s] == Catch::Approx(pm[s]).margin(1e-12));
    const int ch = static_cast<int>(rng.below(3));
    const int ack = static_cast<int>(rng.below(2));
    const double eps = 0.5 * rng.uniform();
    try {
      const Belief uf = bayes_update(b, f, ch, eps, 0.0, 1.0, ack);
      const Belief um = bayes_update(b, full, ch, eps, 0.0, 1.0, ack);
      for (StateIndex s = 0; s < 8; ++s)
        CHECK(uf[s] == Catch::Approx(um[s]).margin(1e-12));
    } catch (const ZeroProbabilityObservation&) {
      // fine for random draws
    }
  }
}

TEST_CASE("updates always return normalized beliefs") {
  RngStream rng(31, 0);
  const TransitionModel m = TransitionModel::independent({0.2, 0.4}, {0.8, 0.6},
                                                         {1.0, 1.0});
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> mass(4);
    for (auto& v : mass) v = rng.uniform();
    const Belief b(mass);
    const Belief p = predict(b, m);
    double sum = 0.0;
    for (StateIndex s = 0; s < 4; ++s) {
      CHECK(p[s] >= 0.0);
      sum += p[s];
    }
    CHECK(sum == Catch::Approx(1.0).margin(1e-9));
  }
}

TEST_CASE("model validation") {
  CHECK_THROWS(TransitionModel::independent({1.2}, {0.5}, {1.0}));
  CHECK_THROWS(TransitionModel::independent({0.2}, {0.5}, {0.0}));
  CHECK_THROWS(TransitionModel::independent({0.2, 0.3}, {0.5}, {1.0, 1.0}));
  CHECK_THROWS(TransitionModel::full({{0.5, 0.4}, {0.5, 0.5}}, {1.0}));
  std::vector<std::vector<double>> big;
  CHECK_THROWS(TransitionModel::full(big, std::vector<double>(13, 1.0)));
}
