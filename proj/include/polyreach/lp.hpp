#pragma once

#include <cmath>
#include <vector>

#include "polyreach/base.hpp"

namespace polyreach {

enum class LpStatus { Optimal, Infeasible, Unbounded };
enum class LpSense { Max, Min };

struct LpResult {
  LpStatus status = LpStatus::Optimal;
  double value = 0.0;
  Vector x;     // maximizer / minimizer, empty unless Optimal
  Vector dual;  // multipliers of Gx <= g for the maximization form, empty unless Optimal
  int iterations = 0;
};

// Dense two-phase primal simplex for  max/min c'x  s.t.  Gx <= g,  x free.
//
// Free variables are split x = p - q, every row gets a slack, and rows with
// negative right-hand side get a phase-1 artificial.  Pricing is Dantzig with
// a switch to Bland's rule after an iteration threshold, so the loop cannot
// cycle.  The returned dual is read off the slack reduced costs and satisfies
// y >= 0, G'y = c, g'y = value for the maximization form (for LpSense::Min it
// prices the equivalent maximization of -c).
inline LpResult lp_solve(const Vector& c, const Matrix& G, const Vector& g,
                         LpSense sense = LpSense::Max, double eps = 1e-9) {
  const int n = static_cast<int>(c.size());
  const int m = static_cast<int>(G.rows());
  if (G.cols() != n || g.size() != m)
    throw DimensionMismatch("lp_solve: c/G/g sizes disagree");

  if (sense == LpSense::Min) {
    LpResult r = lp_solve(-c, G, g, LpSense::Max, eps);
    r.value = -r.value;
    return r;
  }

  LpResult res;
  if (n == 0) {
    if (m == 0 || g.minCoeff() >= -eps) {
      res.x = Vector(0);
      res.dual = Vector::Zero(m);
    } else {
      res.status = LpStatus::Infeasible;
    }
    return res;
  }
  if (m == 0) {
    if (c.lpNorm<Eigen::Infinity>() > eps) {
      res.status = LpStatus::Unbounded;
      return res;
    }
    res.x = Vector::Zero(n);
    res.dual = Vector(0);
    return res;
  }

  const double piv_tol = 1e-11;
  std::vector<double> sigma(m, 1.0);
  int n_art = 0;
  for (int i = 0; i < m; ++i)
    if (g[i] < 0.0) {
      sigma[i] = -1.0;
      ++n_art;
    }

  // columns: [p(0..n) q(n..2n) s(2n..2n+m) a(..rhs)], last column is the rhs
  const int rhs = 2 * n + m + n_art;
  Matrix T = Matrix::Zero(m + 1, rhs + 1);
  std::vector<int> basis(m);
  {
    int art = 2 * n + m;
    for (int i = 0; i < m; ++i) {
      T.block(i, 0, 1, n) = sigma[i] * G.row(i);
      T.block(i, n, 1, n) = -sigma[i] * G.row(i);
      T(i, 2 * n + i) = sigma[i];
      T(i, rhs) = sigma[i] * g[i];
      if (sigma[i] < 0.0) {
        T(i, art) = 1.0;
        basis[i] = art++;
      } else {
        basis[i] = 2 * n + i;
      }
    }
  }

  int iterations = 0;
  const int bland_after = 100 + 10 * (m + n);
  const int hard_cap = 5000 + 200 * (m + n);

  // Pivots until no reduced cost is below -eps; returns false on
  // unboundedness.  T.row(m) holds reduced costs, T(m, rhs) the objective.
  auto run = [&](int active_cols) -> bool {
    bool bland = false;
    for (;;) {
      int enter = -1;
      double best_r = -eps;
      for (int j = 0; j < active_cols; ++j) {
        const double r = T(m, j);
        if (r < best_r) {
          enter = j;
          if (bland) break;
          best_r = r;
        }
      }
      if (enter < 0) return true;

      int leave = -1;
      double best_ratio = 0.0;
      for (int i = 0; i < m; ++i) {
        const double a = T(i, enter);
        if (a <= piv_tol) continue;
        const double ratio = T(i, rhs) / a;
        if (leave < 0 || ratio < best_ratio - 1e-12) {
          leave = i;
          best_ratio = ratio;
        } else if (ratio < best_ratio + 1e-12) {
          const bool take = bland ? basis[i] < basis[leave]
                                  : std::abs(a) > std::abs(T(leave, enter));
          if (take) {
            leave = i;
            best_ratio = ratio;
          }
        }
      }
      if (leave < 0) return false;

      T.row(leave) /= T(leave, enter);
      for (int i = 0; i <= m; ++i) {
        if (i == leave) continue;
        const double f = T(i, enter);
        if (f != 0.0) T.row(i) -= f * T.row(leave);
      }
      basis[leave] = enter;
      if (++iterations > bland_after) bland = true;
      if (iterations > hard_cap) throw NumericalFailure("lp_solve: pivot limit hit");
    }
  };

  if (n_art > 0) {
    // phase 1: maximize -(sum of artificials)
    T.row(m).setZero();
    for (int i = 0; i < m; ++i)
      if (basis[i] >= 2 * n + m) T.row(m) -= T.row(i);
    for (int j = 2 * n + m; j < rhs; ++j) T(m, j) += 1.0;
    if (!run(rhs)) throw NumericalFailure("lp_solve: phase 1 unbounded");
    if (T(m, rhs) < -1e-7 * (1.0 + g.cwiseAbs().maxCoeff())) {
      res.status = LpStatus::Infeasible;
      res.iterations = iterations;
      return res;
    }
    // drive leftover artificials out of the basis; a row that cannot pivot
    // is redundant and is zeroed with a placeholder slack basis entry
    for (int i = 0; i < m; ++i) {
      if (basis[i] < 2 * n + m) continue;
      int piv = -1;
      for (int j = 0; j < 2 * n + m; ++j)
        if (std::abs(T(i, j)) > 1e-9) {
          piv = j;
          break;
        }
      if (piv < 0) {
        T.row(i).setZero();
        basis[i] = 2 * n + i;
        continue;
      }
      T.row(i) /= T(i, piv);
      for (int k = 0; k <= m; ++k) {
        if (k == i) continue;
        const double f = T(k, piv);
        if (f != 0.0) T.row(k) -= f * T.row(i);
      }
      basis[i] = piv;
    }
  }

  // phase 2 objective on [p q] columns; artificial columns stay out of play
  // because run() never scans past 2n + m from here on
  const int live = 2 * n + m;
  auto cost = [&](int j) -> double {
    if (j < n) return c[j];
    if (j < 2 * n) return -c[j - n];
    return 0.0;
  };
  T.row(m).setZero();
  for (int j = 0; j < live; ++j) T(m, j) = -cost(j);
  for (int i = 0; i < m; ++i) {
    const double cb = cost(basis[i]);
    if (cb != 0.0) T.row(m) += cb * T.row(i);
  }

  if (!run(live)) {
    res.status = LpStatus::Unbounded;
    res.iterations = iterations;
    return res;
  }

  res.status = LpStatus::Optimal;
  res.value = T(m, rhs);
  res.iterations = iterations;
  res.x = Vector::Zero(n);
  for (int i = 0; i < m; ++i) {
    if (basis[i] < n)
      res.x[basis[i]] += T(i, rhs);
    else if (basis[i] < 2 * n)
      res.x[basis[i] - n] -= T(i, rhs);
  }
  res.dual = Vector::Zero(m);
  for (int i = 0; i < m; ++i) res.dual[i] = std::max(0.0, T(m, 2 * n + i));
  return res;
}

}  // namespace polyreach
