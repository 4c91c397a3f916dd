#pragma once

// Test-only reference implementations.  Deliberately simple and independent
// of the library code paths they check: brute-force enumeration and textbook
// iterations only.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <vector>

namespace oracle {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Every vertex of {x : Gx <= g} by solving all n-row subsets and keeping
// feasible, non-duplicate solutions.  Exponential; test sizes only.
inline std::vector<VectorXd> vertices(const MatrixXd& G, const VectorXd& g, double feas_tol = 1e-7) {
  const int m = static_cast<int>(G.rows());
  const int n = static_cast<int>(G.cols());
  std::vector<VectorXd> out;
  if (m < n || n == 0) return out;
  std::vector<int> comb(n);
  std::function<void(int, int)> rec = [&](int start, int k) {
    if (k == n) {
      MatrixXd A(n, n);
      VectorXd b(n);
      for (int i = 0; i < n; ++i) {
        A.row(i) = G.row(comb[i]);
        b[i] = g[comb[i]];
      }
      Eigen::FullPivLU<MatrixXd> lu(A);
      if (lu.rank() < n) return;
      VectorXd x = lu.solve(b);
      if (((G * x - g).array() > feas_tol * (1.0 + g.cwiseAbs().maxCoeff())).any()) return;
      for (const auto& v : out)
        if ((v - x).lpNorm<Eigen::Infinity>() < 1e-6 * (1.0 + x.lpNorm<Eigen::Infinity>())) return;
      out.push_back(x);
      return;
    }
    for (int i = start; i <= m - (n - k); ++i) {
      comb[k] = i;
      rec(i + 1, k + 1);
    }
  };
  rec(0, 0);
  return out;
}

namespace detail {

// One pass of the full-tableau simplex with Bland's rule: minimizes cost'v
// over {T v = b, v >= 0} starting from the canonical basis given.  Columns
// with allowed[j] == 0 never enter.  Returns false when unbounded.
inline bool simplex_phase(MatrixXd& T, VectorXd& b, std::vector<int>& basis,
                          const VectorXd& cost, const std::vector<char>& allowed,
                          double* zval) {
  const int m = static_cast<int>(T.rows());
  const int N = static_cast<int>(T.cols());
  VectorXd cb(m), red(N);
  for (int guard = 0; guard < 50000; ++guard) {
    for (int i = 0; i < m; ++i) cb[i] = cost[basis[static_cast<std::size_t>(i)]];
    red = cost - T.transpose() * cb;
    int enter = -1;
    for (int j = 0; j < N; ++j)
      if (allowed[static_cast<std::size_t>(j)] && red[j] < -1e-9) {
        enter = j;
        break;
      }
    if (enter < 0) {
      *zval = cb.dot(b);
      return true;
    }
    int leave = -1;
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < m; ++i) {
      if (T(i, enter) <= 1e-11) continue;
      const double r = b[i] / T(i, enter);
      if (r < best - 1e-12 ||
          (r <= best + 1e-12 &&
           (leave < 0 || basis[static_cast<std::size_t>(i)] < basis[static_cast<std::size_t>(leave)])))
        best = r, leave = i;
    }
    if (leave < 0) return false;
    const double piv = T(leave, enter);
    T.row(leave) /= piv;
    b[leave] /= piv;
    for (int i = 0; i < m; ++i) {
      if (i == leave) continue;
      const double f = T(i, enter);
      if (f != 0.0) {
        T.row(i) -= f * T.row(leave);
        b[i] -= f * b[leave];
        if (b[i] < 0.0 && b[i] > -1e-11) b[i] = 0.0;
      }
    }
    basis[static_cast<std::size_t>(leave)] = enter;
  }
  return false;
}

}  // namespace detail

// max c'x over {Gx <= g} by a dense two-phase simplex on the split form
// [G -G I](p; q; s) = g.  Returns nullopt when infeasible or unbounded.
inline std::optional<double> lp_max(const VectorXd& c, const MatrixXd& G, const VectorXd& g) {
  const int m = static_cast<int>(G.rows());
  const int n = static_cast<int>(G.cols());
  if (m == 0) return n == 0 || c.lpNorm<Eigen::Infinity>() == 0.0
                  ? std::optional<double>(0.0)
                  : std::nullopt;
  if (n == 0) return g.minCoeff() >= -1e-9 ? std::optional<double>(0.0) : std::nullopt;
  const int nv = 2 * n + m;
  MatrixXd T(m, nv + m);
  T.leftCols(n) = G;
  T.middleCols(n, n) = -G;
  T.middleCols(2 * n, m) = MatrixXd::Identity(m, m);
  T.rightCols(m) = MatrixXd::Identity(m, m);
  VectorXd b = g;
  for (int i = 0; i < m; ++i)
    if (b[i] < 0.0) {
      T.row(i).head(nv) *= -1.0;
      b[i] *= -1.0;
    }
  std::vector<int> basis(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) basis[static_cast<std::size_t>(i)] = nv + i;

  VectorXd cost1 = VectorXd::Zero(nv + m);
  cost1.tail(m).setOnes();
  std::vector<char> allow_all(static_cast<std::size_t>(nv + m), 1);
  double z1 = 0.0;
  if (!detail::simplex_phase(T, b, basis, cost1, allow_all, &z1)) return std::nullopt;
  if (z1 > 1e-7) return std::nullopt;

  // Pivot any artificial still basic at zero onto a structural column; a row
  // with no eligible pivot is redundant and can stay (the artificial is glued
  // to zero because entering columns are restricted below).
  std::vector<char> structural(static_cast<std::size_t>(nv + m), 1);
  for (int j = nv; j < nv + m; ++j) structural[static_cast<std::size_t>(j)] = 0;
  for (int i = 0; i < m; ++i) {
    if (basis[static_cast<std::size_t>(i)] < nv) continue;
    for (int j = 0; j < nv; ++j) {
      if (std::abs(T(i, j)) <= 1e-9) continue;
      const double piv = T(i, j);
      T.row(i) /= piv;
      b[i] /= piv;
      for (int r = 0; r < m; ++r) {
        if (r == i) continue;
        const double f = T(r, j);
        if (f != 0.0) {
          T.row(r) -= f * T.row(i);
          b[r] -= f * b[i];
          if (b[r] < 0.0 && b[r] > -1e-11) b[r] = 0.0;
        }
      }
      basis[static_cast<std::size_t>(i)] = j;
      break;
    }
  }

  VectorXd cost2 = VectorXd::Zero(nv + m);
  cost2.head(n) = -c;
  cost2.segment(n, n) = c;
  double z2 = 0.0;
  if (!detail::simplex_phase(T, b, basis, cost2, structural, &z2)) return std::nullopt;
  return -z2;
}

// Drops rows that LP redundancy shows the remaining rows already imply.
inline void prune_rows(MatrixXd& G, VectorXd& g, double tol = 1e-9) {
  const int m = static_cast<int>(G.rows());
  std::vector<char> keep(static_cast<std::size_t>(m), 1);
  for (int i = 0; i < m; ++i) {
    int cnt = 0;
    for (int j = 0; j < m; ++j) cnt += (j != i && keep[static_cast<std::size_t>(j)]) ? 1 : 0;
    if (cnt == 0) continue;
    MatrixXd Gr(cnt, G.cols());
    VectorXd gr(cnt);
    for (int j = 0, at = 0; j < m; ++j)
      if (j != i && keep[static_cast<std::size_t>(j)]) {
        Gr.row(at) = G.row(j);
        gr[at++] = g[j];
      }
    auto s = lp_max(VectorXd(G.row(i).transpose()), Gr, gr);
    if (s && *s <= g[i] + tol) keep[static_cast<std::size_t>(i)] = 0;
  }
  int cnt = 0;
  for (char k : keep) cnt += k ? 1 : 0;
  MatrixXd Gn(cnt, G.cols());
  VectorXd gn(cnt);
  for (int j = 0, at = 0; j < m; ++j)
    if (keep[static_cast<std::size_t>(j)]) {
      Gn.row(at) = G.row(j);
      gn[at++] = g[j];
    }
  G = std::move(Gn);
  g = std::move(gn);
}

// max q'x over a finite vertex list.
inline double support_over(const std::vector<VectorXd>& verts, const VectorXd& q) {
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& v : verts) best = std::max(best, q.dot(v));
  return best;
}

struct Mrpi {
  MatrixXd G;
  VectorXd g;
  int refinements = 0;
  bool converged = false;
};

// Textbook maximal-RPI iteration for x+ = A x + E h, h in {GH h <= gh},
// state constraint {Gz x <= gz}:
//   O_0 = Z,  O_{k+1} = O_k intersect pre(O_k),
//   pre(S) = { x : G_S A x <= g_S - max_h G_S E h }.
// Stops when every candidate new row is already redundant on O_k; rows are
// pruned LP-wise each pass so the representation stays small.
inline Mrpi mrpi(const MatrixXd& A, const MatrixXd& E, const MatrixXd& Gz, const VectorXd& gz,
                 const MatrixXd& GH, const VectorXd& gh, int max_iters = 60, double tol = 1e-9) {
  Mrpi out{Gz, gz, 0, false};
  prune_rows(out.G, out.g, tol);
  for (int it = 1; it <= max_iters; ++it) {
    MatrixXd Gp = out.G * A;
    VectorXd gp = out.g;
    if (E.cols() > 0 && GH.rows() > 0) {
      for (int j = 0; j < out.G.rows(); ++j) {
        auto s = lp_max(VectorXd(E.transpose() * out.G.row(j).transpose()), GH, gh);
        if (!s) return out;
        gp[j] -= *s;
      }
    }
    std::vector<int> fresh;
    for (int j = 0; j < Gp.rows(); ++j) {
      auto s = lp_max(VectorXd(Gp.row(j).transpose()), out.G, out.g);
      if (!s) return out;
      if (*s > gp[j] + tol) fresh.push_back(j);
    }
    if (fresh.empty()) {
      out.converged = true;
      return out;
    }
    MatrixXd Gn(out.G.rows() + static_cast<int>(fresh.size()), out.G.cols());
    VectorXd gn(out.g.size() + static_cast<int>(fresh.size()));
    Gn.topRows(out.G.rows()) = out.G;
    gn.head(out.g.size()) = out.g;
    for (std::size_t k = 0; k < fresh.size(); ++k) {
      Gn.row(out.G.rows() + static_cast<int>(k)) = Gp.row(fresh[k]);
      gn[out.g.size() + static_cast<int>(k)] = gp[fresh[k]];
    }
    out.G = std::move(Gn);
    out.g = std::move(gn);
    prune_rows(out.G, out.g, tol);
    out.refinements = it;
  }
  return out;
}

// Random bounded polytope with the origin strictly inside: a box of radius
// `r` tightened by `extra` random halfspaces with positive offsets.
inline void random_cset(std::mt19937_64& eng, int n, int extra, MatrixXd& G, VectorXd& g) {
  std::uniform_real_distribution<double> off(0.4, 1.5);
  std::normal_distribution<double> nd(0.0, 1.0);
  const double r = off(eng);
  G = MatrixXd::Zero(2 * n + extra, n);
  g = VectorXd::Zero(2 * n + extra);
  for (int i = 0; i < n; ++i) {
    G(2 * i, i) = 1.0;
    g[2 * i] = r;
    G(2 * i + 1, i) = -1.0;
    g[2 * i + 1] = r;
  }
  for (int k = 0; k < extra; ++k) {
    VectorXd d(n);
    double nrm = 0.0;
    do {
      for (int i = 0; i < n; ++i) d[i] = nd(eng);
      nrm = d.norm();
    } while (nrm < 1e-12);
    G.row(2 * n + k) = d.transpose() / nrm;
    g[2 * n + k] = off(eng);
  }
}

}  // namespace oracle
