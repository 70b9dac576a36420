#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace osa {

enum class LpRelation { LessEq, Equal, GreaterEq };
enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpConstraint {
  std::vector<double> coeffs;
  LpRelation relation = LpRelation::LessEq;
  double bound = 0.0;
};

// Maximize objective . x subject to constraints and per-variable bounds.
// Bounds default to [0, +inf).
struct LpProblem {
  std::vector<double> objective;
  std::vector<LpConstraint> constraints;
  std::vector<std::pair<double, double>> variable_bounds;  // optional

  std::size_t num_vars() const { return objective.size(); }
};

struct LpResult {
  LpStatus status = LpStatus::Infeasible;
  std::vector<double> solution;
  double objective_value = 0.0;
};

namespace detail {

// Dense two-phase primal simplex on the full tableau, Bland's rule.
class SimplexTableau {
 public:
  SimplexTableau(std::size_t rows, std::size_t cols)
      : m_(rows), n_(cols), t_(rows + 1, std::vector<double>(cols + 1, 0.0)),
        basis_(rows, 0) {}

  std::vector<std::vector<double>>& tab() { return t_; }
  std::vector<int>& basis() { return basis_; }

  // price out basic columns in the objective row (row m_)
  void price_out() {
    for (std::size_t i = 0; i < m_; ++i) {
      const double cb = t_[m_][basis_[i]];
      if (cb == 0.0) continue;
      for (std::size_t j = 0; j <= n_; ++j) t_[m_][j] -= cb * t_[i][j];
    }
  }

  // Maximization step loop. allowed[j] == false bars a column from entering.
  // Returns false if unbounded.
  bool run(const std::vector<bool>& allowed) {
    constexpr double tol = 1e-9;
    for (;;) {
      // Bland: entering column = smallest index with positive reduced cost
      std::size_t enter = n_;
      for (std::size_t j = 0; j < n_; ++j) {
        if (allowed[j] && t_[m_][j] > tol) {
          enter = j;
          break;
        }
      }
      if (enter == n_) return true;  // optimal
      // ratio test; ties broken by smallest basic variable index (Bland)
      std::size_t leave = m_;
      double best = std::numeric_limits<double>::infinity();
      // textbook Bland: strictly minimal ratio, exact ties broken by the
      // smallest basic variable index (guarantees termination on the
      // degenerate zero-RHS rows these LPs are full of)
      for (std::size_t i = 0; i < m_; ++i) {
        if (t_[i][enter] > tol) {
          const double ratio = t_[i][n_] / t_[i][enter];
          if (ratio < best ||
              (ratio == best && leave != m_ && basis_[i] < basis_[leave])) {
            best = ratio;
            leave = i;
          }
        }
      }
      if (leave == m_) return false;  // unbounded
      pivot(leave, enter);
    }
  }

  void pivot(std::size_t row, std::size_t col) {
    const double p = t_[row][col];
    for (std::size_t j = 0; j <= n_; ++j) t_[row][j] /= p;
    for (std::size_t i = 0; i <= m_; ++i) {
      if (i == row) continue;
      const double f = t_[i][col];
      if (f == 0.0) continue;
      for (std::size_t j = 0; j <= n_; ++j) t_[i][j] -= f * t_[row][j];
    }
    basis_[row] = static_cast<int>(col);
  }

  std::size_t m_, n_;
  std::vector<std::vector<double>> t_;
  std::vector<int> basis_;
};

}  // namespace detail

inline LpResult lp_solve(const LpProblem& problem) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  constexpr double tol = 1e-9;
  const std::size_t nv = problem.num_vars();
  for (const auto& c : problem.constraints) {
    if (c.coeffs.size() != nv)
      throw std::invalid_argument("lp_solve: constraint arity mismatch");
  }
  std::vector<std::pair<double, double>> bounds = problem.variable_bounds;
  if (bounds.empty()) bounds.assign(nv, {0.0, inf});
  if (bounds.size() != nv)
    throw std::invalid_argument("lp_solve: bound count mismatch");
  for (const auto& [lo, hi] : bounds) {
    if (lo > hi) throw std::invalid_argument("lp_solve: lo > hi");
  }

  // Substitute variables so every simplex variable is >= 0.
  // col_of[j] -> first tableau column of variable j; free vars get two columns.
  struct VarMap {
    int col;
    double shift;  // x = shift + sign*u (+ for lo-shifted, - for hi-shifted)
    double sign;
    bool split;  // x = u - v (free variable)
  };
  std::vector<VarMap> vmap(nv);
  std::size_t nstruct = 0;
  for (std::size_t j = 0; j < nv; ++j) {
    const auto [lo, hi] = bounds[j];
    if (lo > -inf) {
      vmap[j] = {static_cast<int>(nstruct), lo, 1.0, false};
      nstruct += 1;
    } else if (hi < inf) {
      vmap[j] = {static_cast<int>(nstruct), hi, -1.0, false};
      nstruct += 1;
    } else {
      vmap[j] = {static_cast<int>(nstruct), 0.0, 1.0, true};
      nstruct += 2;
    }
  }

  // Collect rows: user constraints plus finite-width bound rows.
  struct Row {
    std::vector<double> a;
    LpRelation rel;
    double b;
  };
  std::vector<Row> rows;
  auto add_row = [&](const std::vector<double>& coeffs, LpRelation rel, double b) {
    Row r{std::vector<double>(nstruct, 0.0), rel, b};
    for (std::size_t j = 0; j < nv; ++j) {
      const double c = coeffs[j];
      if (c == 0.0) continue;
      r.a[vmap[j].col] += c * vmap[j].sign;
      if (vmap[j].split) r.a[vmap[j].col + 1] -= c;
      r.b -= c * vmap[j].shift;
    }
    rows.push_back(std::move(r));
  };
  for (const auto& c : problem.constraints) add_row(c.coeffs, c.relation, c.bound);
  for (std::size_t j = 0; j < nv; ++j) {
    const auto [lo, hi] = bounds[j];
    if (lo > -inf && hi < inf) {
      // shifted variable u_j <= hi - lo (zero width pins a fixed variable)
      Row r{std::vector<double>(nstruct, 0.0), LpRelation::LessEq, hi - lo};
      r.a[vmap[j].col] = 1.0;
      rows.push_back(std::move(r));
    }
  }

  const std::size_t m = rows.size();
  // normalize RHS >= 0; zero-RHS GreaterEq rows flip to LessEq so they start
  // feasible with a basic slack instead of an artificial
  for (auto& r : rows) {
    if (r.b < 0.0 || (r.b == 0.0 && r.rel == LpRelation::GreaterEq)) {
      for (auto& a : r.a) a = -a;
      r.b = -r.b;
      if (r.rel == LpRelation::LessEq)
        r.rel = LpRelation::GreaterEq;
      else if (r.rel == LpRelation::GreaterEq)
        r.rel = LpRelation::LessEq;
    }
  }

  std::size_t nslack = 0, nart = 0;
  for (const auto& r : rows) {
    if (r.rel != LpRelation::Equal) nslack += 1;
    if (r.rel != LpRelation::LessEq) nart += 1;
  }
  const std::size_t ncol = nstruct + nslack + nart;
  detail::SimplexTableau T(m, ncol);
  auto& tab = T.tab();
  std::size_t slack_at = nstruct, art_at = nstruct + nslack;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < nstruct; ++j) tab[i][j] = rows[i].a[j];
    tab[i][ncol] = rows[i].b;
    switch (rows[i].rel) {
      case LpRelation::LessEq:
        tab[i][slack_at] = 1.0;
        T.basis()[i] = static_cast<int>(slack_at++);
        break;
      case LpRelation::GreaterEq:
        tab[i][slack_at++] = -1.0;
        tab[i][art_at] = 1.0;
        T.basis()[i] = static_cast<int>(art_at++);
        break;
      case LpRelation::Equal:
        tab[i][art_at] = 1.0;
        T.basis()[i] = static_cast<int>(art_at++);
        break;
    }
  }

  std::vector<bool> allowed(ncol, true);
  if (nart > 0) {
    // phase 1: maximize -sum(artificials)
    for (std::size_t j = nstruct + nslack; j < ncol; ++j) tab[m][j] = -1.0;
    T.price_out();
    T.run(allowed);  // bounded by construction
    // objective row RHS holds the negated phase-1 value
    if (tab[m][ncol] > tol) return {LpStatus::Infeasible, {}, 0.0};
    // drive remaining basic artificials out where possible
    for (std::size_t i = 0; i < m; ++i) {
      if (T.basis()[i] < static_cast<int>(nstruct + nslack)) continue;
      for (std::size_t j = 0; j < nstruct + nslack; ++j) {
        if (std::fabs(tab[i][j]) > tol) {
          T.pivot(i, j);
          break;
        }
      }
    }
    for (std::size_t j = nstruct + nslack; j < ncol; ++j) allowed[j] = false;
  }

  // phase 2
  for (std::size_t j = 0; j <= ncol; ++j) tab[m][j] = 0.0;
  double obj_const = 0.0;
  for (std::size_t j = 0; j < nv; ++j) {
    const double c = problem.objective[j];
    if (c == 0.0) continue;
    tab[m][vmap[j].col] += c * vmap[j].sign;
    if (vmap[j].split) tab[m][vmap[j].col + 1] -= c;
    obj_const += c * vmap[j].shift;
  }
  T.price_out();
  if (!T.run(allowed)) return {LpStatus::Unbounded, {}, 0.0};

  std::vector<double> u(ncol, 0.0);
  for (std::size_t i = 0; i < m; ++i) u[T.basis()[i]] = tab[i][ncol];
  LpResult res;
  res.status = LpStatus::Optimal;
  res.solution.resize(nv);
  for (std::size_t j = 0; j < nv; ++j) {
    double x = vmap[j].shift + vmap[j].sign * u[vmap[j].col];
    if (vmap[j].split) x -= u[vmap[j].col + 1];
    res.solution[j] = x;
  }
  res.objective_value = -tab[m][ncol] + obj_const;
  return res;
}

}  // namespace osa
