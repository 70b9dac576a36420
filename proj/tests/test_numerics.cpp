#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "osa/bisect.hpp"
#include "osa/gamma.hpp"
#include "osa/lp.hpp"
#include "osa/rng.hpp"

using namespace osa;

namespace {

// long-double power-series oracle for the regularized lower incomplete gamma
long double gamma_series_oracle(long double s, long double x) {
  if (x == 0.0L) return 0.0L;
  // gamma(s,x) = x^s e^-x sum_n x^n / (s (s+1) ... (s+n))
  long double term = 1.0L / s;
  long double sum = term;
  for (int n = 1; n < 1000000; ++n) {
    term *= x / (s + n);
    sum += term;
    if (term < sum * 1e-22L) break;
  }
  return sum * std::exp(s * std::log(x) - x - std::lgamma((double)s));
}

}  // namespace

TEST_CASE("reg_gamma_lower closed-form values") {
  CHECK(reg_gamma_lower(1.0, std::log(2.0)) == Catch::Approx(0.5).margin(1e-12));
  CHECK(reg_gamma_lower(1.0, 0.0) == 0.0);
  // equals erf(sqrt(0.5))
  CHECK(reg_gamma_lower(0.5, 0.5) ==
        Catch::Approx(std::erf(std::sqrt(0.5))).margin(1e-12));
}

TEST_CASE("reg_gamma_lower domain errors") {
  CHECK_THROWS_AS(reg_gamma_lower(0.0, 1.0), std::domain_error);
  CHECK_THROWS_AS(reg_gamma_lower(-1.0, 1.0), std::domain_error);
  CHECK_THROWS_AS(reg_gamma_lower(1.0, -0.1), std::domain_error);
}

TEST_CASE("reg_gamma_lower matches series oracle on a grid") {
  for (double s = 0.5; s <= 10.0; s += 0.5) {
    double prev = -1.0;
    for (int xi = 0; xi <= 50; ++xi) {
      const double x = xi;
      const double got = reg_gamma_lower(s, x);
      CHECK(got >= 0.0);
      CHECK(got < 1.0 + 1e-15);
      CHECK(got >= prev - 1e-14);  // nondecreasing in x
      prev = got;
      const double want = (double)gamma_series_oracle(s, x);
      CHECK(got == Catch::Approx(want).margin(1e-10));
    }
  }
}

TEST_CASE("invert_monotone") {
  CHECK(invert_monotone([](double x) { return x * x; }, 4.0, 0.0, 10.0) ==
        Catch::Approx(2.0).margin(1e-9));
  CHECK(invert_monotone([](double x) { return reg_gamma_lower(1.0, x / 8.0); },
                        0.05, 0.0, 100.0) ==
        Catch::Approx(-8.0 * std::log(0.95)).margin(1e-7));
  CHECK(invert_monotone([](double x) { return x; }, 0.3, 0.0, 1.0) ==
        Catch::Approx(0.3).margin(1e-12));
  // decreasing function
  CHECK(invert_monotone([](double x) { return -x; }, -0.7, 0.0, 1.0) ==
        Catch::Approx(0.7).margin(1e-12));
  CHECK_THROWS(invert_monotone([](double x) { return x; }, 5.0, 0.0, 1.0));
}

TEST_CASE("lp_solve basic statuses") {
  {
    LpProblem p;
    p.objective = {1.0, 1.0};
    p.constraints.push_back({{1.0, 0.0}, LpRelation::LessEq, 1.0});
    p.constraints.push_back({{0.0, 1.0}, LpRelation::LessEq, 1.0});
    const LpResult r = lp_solve(p);
    REQUIRE(r.status == LpStatus::Optimal);
    CHECK(r.objective_value == Catch::Approx(2.0).margin(1e-9));
    CHECK(r.solution[0] == Catch::Approx(1.0).margin(1e-9));
    CHECK(r.solution[1] == Catch::Approx(1.0).margin(1e-9));
  }
  {
    LpProblem p;
    p.objective = {1.0};
    const LpResult r = lp_solve(p);
    CHECK(r.status == LpStatus::Unbounded);
  }
  {
    LpProblem p;
    p.objective = {0.0};
    p.constraints.push_back({{1.0}, LpRelation::LessEq, -1.0});
    const LpResult r = lp_solve(p);
    CHECK(r.status == LpStatus::Infeasible);
  }
}

TEST_CASE("lp_solve handles equality and general bounds") {
  // max x + 2y s.t. x + y = 1, x in [-1, 1], y free but y <= 0.75 via row
  LpProblem p;
  p.objective = {1.0, 2.0};
  p.variable_bounds = {{-1.0, 1.0},
                       {-std::numeric_limits<double>::infinity(),
                        std::numeric_limits<double>::infinity()}};
  p.constraints.push_back({{1.0, 1.0}, LpRelation::Equal, 1.0});
  p.constraints.push_back({{0.0, 1.0}, LpRelation::LessEq, 0.75});
  const LpResult r = lp_solve(p);
  REQUIRE(r.status == LpStatus::Optimal);
  CHECK(r.solution[0] == Catch::Approx(0.25).margin(1e-9));
  CHECK(r.solution[1] == Catch::Approx(0.75).margin(1e-9));
  CHECK(r.objective_value == Catch::Approx(1.75).margin(1e-9));
}

TEST_CASE("lp_solve pins fixed variables") {
  LpProblem p;
  p.objective = {1.0, 1.0};
  p.variable_bounds = {{0.3, 0.3}, {0.0, 2.0}};
  p.constraints.push_back({{1.0, 1.0}, LpRelation::LessEq, 1.0});
  const LpResult r = lp_solve(p);
  REQUIRE(r.status == LpStatus::Optimal);
  CHECK(r.solution[0] == Catch::Approx(0.3).margin(1e-9));
  CHECK(r.solution[1] == Catch::Approx(0.7).margin(1e-9));
}

namespace {

// brute-force LP oracle: enumerate basic solutions from all n-subsets of the
// active-constraint candidates (rows and bound faces)
double vertex_enum_oracle(const LpProblem& p) {
  const std::size_t n = p.num_vars();
  struct Face {
    std::vector<double> a;
    double b;
  };
  std::vector<Face> faces;
  for (const auto& c : p.constraints) faces.push_back({c.coeffs, c.bound});
  for (std::size_t j = 0; j < n; ++j) {
    std::vector<double> e(n, 0.0);
    e[j] = 1.0;
    faces.push_back({e, p.variable_bounds.empty() ? 0.0 : p.variable_bounds[j].first});
    std::vector<double> e2(n, 0.0);
    e2[j] = 1.0;
    faces.push_back({e2, p.variable_bounds.empty()
                             ? std::numeric_limits<double>::infinity()
                             : p.variable_bounds[j].second});
  }
  double best = -std::numeric_limits<double>::infinity();
  std::vector<std::size_t> idx(n);
  const std::size_t nf = faces.size();
  std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t pos,
                                                          std::size_t start) {
    if (pos == n) {
      // solve the n x n system
      std::vector<std::vector<double>> m(n, std::vector<double>(n + 1));
      for (std::size_t i = 0; i < n; ++i) {
        if (std::isinf(faces[idx[i]].b)) return;
        for (std::size_t j = 0; j < n; ++j) m[i][j] = faces[idx[i]].a[j];
        m[i][n] = faces[idx[i]].b;
      }
      for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t i = col; i < n; ++i)
          if (std::fabs(m[i][col]) > std::fabs(m[piv][col])) piv = i;
        if (std::fabs(m[piv][col]) < 1e-10) return;  // singular
        std::swap(m[col], m[piv]);
        for (std::size_t i = 0; i < n; ++i) {
          if (i == col) continue;
          const double f = m[i][col] / m[col][col];
          for (std::size_t j = col; j <= n; ++j) m[i][j] -= f * m[col][j];
        }
      }
      std::vector<double> x(n);
      for (std::size_t j = 0; j < n; ++j) x[j] = m[j][n] / m[j][j];
      // feasibility
      for (const auto& c : p.constraints) {
        double lhs = 0.0;
        for (std::size_t j = 0; j < n; ++j) lhs += c.coeffs[j] * x[j];
        if (c.relation == LpRelation::LessEq && lhs > c.bound + 1e-7) return;
        if (c.relation == LpRelation::GreaterEq && lhs < c.bound - 1e-7) return;
        if (c.relation == LpRelation::Equal && std::fabs(lhs - c.bound) > 1e-7)
          return;
      }
      for (std::size_t j = 0; j < n; ++j) {
        const auto [lo, hi] = p.variable_bounds.empty()
                                  ? std::pair<double, double>{0.0,
                                        std::numeric_limits<double>::infinity()}
                                  : p.variable_bounds[j];
        if (x[j] < lo - 1e-7 || x[j] > hi + 1e-7) return;
      }
      double obj = 0.0;
      for (std::size_t j = 0; j < n; ++j) obj += p.objective[j] * x[j];
      best = std::max(best, obj);
      return;
    }
    for (std::size_t f = start; f < nf; ++f) {
      idx[pos] = f;
      rec(pos + 1, f + 1);
    }
  };
  rec(0, 0);
  return best;
}

}  // namespace

TEST_CASE("lp_solve matches vertex-enumeration oracle on random problems") {
  RngStream rng(404, 0);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 2 + rng.below(3);       // 2..4 vars
    const std::size_t rows = 2 + rng.below(3);    // 2..4 constraints
    LpProblem p;
    p.objective.resize(n);
    for (auto& c : p.objective) c = -1.0 + 2.0 * rng.uniform();
    p.variable_bounds.assign(n, {0.0, 1.0 + rng.uniform()});
    for (std::size_t i = 0; i < rows; ++i) {
      LpConstraint c;
      c.coeffs.resize(n);
      for (auto& a : c.coeffs) a = -1.0 + 2.0 * rng.uniform();
      c.relation = LpRelation::LessEq;
      c.bound = 0.5 + rng.uniform();  // x = 0 feasible when bound could be < 0?
      if (c.bound < 0) c.bound = 0.0;
      p.constraints.push_back(std::move(c));
    }
    const LpResult r = lp_solve(p);
    REQUIRE(r.status == LpStatus::Optimal);
    const double oracle = vertex_enum_oracle(p);
    CHECK(r.objective_value == Catch::Approx(oracle).margin(1e-7));
    // primal feasibility of the returned point
    for (const auto& c : p.constraints) {
      double lhs = 0.0;
      for (std::size_t j = 0; j < n; ++j) lhs += c.coeffs[j] * r.solution[j];
      CHECK(lhs <= c.bound + 1e-9);
    }
  }
}

TEST_CASE("RngStream determinism and stream separation") {
  RngStream a(42, 7), b(42, 7), c(42, 8);
  bool all_equal = true, any_diff = false;
  for (int i = 0; i < 10000; ++i) {
    const std::uint64_t va = a.next_u64();
    if (va != b.next_u64()) all_equal = false;
    if (va != c.next_u64()) any_diff = true;
  }
  CHECK(all_equal);
  CHECK(any_diff);
}

TEST_CASE("RngStream uniform and bernoulli ranges") {
  RngStream rng(1, 1);
  double lo = 1.0, hi = 0.0;
  int ones = 0;
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform();
    lo = std::min(lo, u);
    hi = std::max(hi, u);
    if (rng.bernoulli(0.3)) ++ones;
  }
  CHECK(lo >= 0.0);
  CHECK(hi < 1.0);
  CHECK(std::fabs(ones / 100000.0 - 0.3) < 3.0 * std::sqrt(0.3 * 0.7 / 100000.0));
}
