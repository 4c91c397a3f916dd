#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "polyreach/polytope.hpp"

namespace polyreach {

namespace detail {

inline std::vector<Vector> dedupe_points(const std::vector<Vector>& pts, double tol = 1e-9) {
  std::vector<Vector> out;
  out.reserve(pts.size());
  for (const auto& p : pts) {
    bool seen = false;
    for (const auto& q : out)
      if ((p - q).lpNorm<Eigen::Infinity>() <= tol * (1.0 + p.lpNorm<Eigen::Infinity>())) {
        seen = true;
        break;
      }
    if (!seen) out.push_back(p);
  }
  return out;
}

// Orthonormal basis of span{p - c : p in pts} by modified Gram-Schmidt.
inline Matrix affine_basis(const std::vector<Vector>& pts, const Vector& c) {
  const int n = static_cast<int>(c.size());
  double scale = 0.0;
  for (const auto& p : pts) scale = std::max(scale, (p - c).norm());
  const double tol = 1e-9 * (1.0 + scale);
  Matrix B(n, 0);
  for (const auto& p : pts) {
    Vector d = p - c;
    for (int j = 0; j < B.cols(); ++j) d -= B.col(j).dot(d) * B.col(j);
    const double nrm = d.norm();
    if (nrm > tol) {
      B.conservativeResize(n, B.cols() + 1);
      B.col(B.cols() - 1) = d / nrm;
      if (B.cols() == n) break;
    }
  }
  return B;
}

// Completes an orthonormal column set to a full basis of R^n.
inline Matrix orthogonal_complement(const Matrix& B) {
  const int n = static_cast<int>(B.rows());
  Matrix C(n, 0);
  for (int i = 0; i < n && B.cols() + C.cols() < n; ++i) {
    Vector d = Vector::Zero(n);
    d[i] = 1.0;
    for (int j = 0; j < B.cols(); ++j) d -= B.col(j).dot(d) * B.col(j);
    for (int j = 0; j < C.cols(); ++j) d -= C.col(j).dot(d) * C.col(j);
    const double nrm = d.norm();
    if (nrm > 1e-9) {
      C.conservativeResize(n, C.cols() + 1);
      C.col(C.cols() - 1) = d / nrm;
    }
  }
  return C;
}

inline double combination_count(int m, int n) {
  double c = 1.0;
  for (int i = 0; i < n; ++i) c = c * (m - i) / (i + 1);
  return c;
}

}  // namespace detail

struct VertexData {
  std::vector<Vector> verts;
  HPolytope reduced;
};

// All vertices of a bounded nonempty polytope by active-set enumeration:
// every full-rank subset of n facet rows is solved and kept when feasible.
// Redundant rows are stripped first so the combinatorial base stays small.
inline VertexData vertex_data(const HPolytope& P, double eps = 1e-9) {
  if (P.explicitly_empty() || is_empty(P, eps)) throw EmptySetError("vertices: empty set");
  if (!is_bounded(P, eps)) throw UnboundedError("vertices: unbounded set");
  const int n = P.dim();
  VertexData out;
  out.reduced = remove_redundancy(P, eps);
  if (n == 0) {
    out.verts.push_back(Vector(0));
    return out;
  }
  const int m = out.reduced.rows();
  if (m < n) throw NumericalFailure("vertices: fewer facets than dimensions on a bounded set");
  if (detail::combination_count(m, n) > 2.0e6)
    throw EnumerationOverflow("vertices: too many facet combinations");

  const Matrix& G = out.reduced.G();
  const Vector& g = out.reduced.g();
  const double feas_tol = 1e-7 * (1.0 + g.cwiseAbs().maxCoeff());

  std::vector<int> comb(n);
  Matrix A(n, n);
  Vector b(n);
  auto emit = [&]() {
    for (int i = 0; i < n; ++i) {
      A.row(i) = G.row(comb[i]);
      b[i] = g[comb[i]];
    }
    Eigen::FullPivLU<Matrix> lu(A);
    if (lu.rank() < n) return;
    Vector x = lu.solve(b);
    if (((G * x - g).array() > feas_tol).any()) return;
    for (const auto& v : out.verts)
      if ((v - x).lpNorm<Eigen::Infinity>() <= 1e-7 * (1.0 + x.lpNorm<Eigen::Infinity>())) return;
    out.verts.push_back(x);
  };
  // iterative n-combination walk over row indices
  for (int i = 0; i < n; ++i) comb[i] = i;
  for (;;) {
    emit();
    int k = n - 1;
    while (k >= 0 && comb[k] == m - n + k) --k;
    if (k < 0) break;
    ++comb[k];
    for (int j = k + 1; j < n; ++j) comb[j] = comb[j - 1] + 1;
  }
  if (out.verts.empty()) throw NumericalFailure("vertices: no vertex found on a bounded set");
  return out;
}

inline std::vector<Vector> vertices(const HPolytope& P, double eps = 1e-9) {
  return vertex_data(P, eps).verts;
}

namespace detail {

// Facet rows of conv(Y) for a full-dimensional local point cloud with the
// origin interior: vertices of the polar {w : w'y_i <= 1} are the facet
// normals.  Rows come back unit-normalized.
inline void hull_local(const std::vector<Vector>& Y, Matrix& R, Vector& r) {
  const int k = static_cast<int>(Y[0].size());
  Matrix Gp(static_cast<int>(Y.size()), k);
  for (size_t i = 0; i < Y.size(); ++i) Gp.row(static_cast<int>(i)) = Y[i].transpose();
  HPolytope polar(Gp, Vector::Ones(static_cast<int>(Y.size())));
  auto W = vertex_data(remove_redundancy(polar)).verts;
  R.resize(static_cast<int>(W.size()), k);
  r.resize(static_cast<int>(W.size()));
  int rows = 0;
  for (const auto& w : W) {
    const double nrm = w.norm();
    if (nrm < 1e-12) continue;
    R.row(rows) = w.transpose() / nrm;
    r[rows] = 1.0 / nrm;
    ++rows;
  }
  R.conservativeResize(rows, k);
  r.conservativeResize(rows);
}

// Triangulates conv(pts) into simplices of its own affine dimension k,
// recursing facet-by-facet and coning from the centroid.  Points keep their
// ambient coordinates; only the rank detection runs in local coordinates.
struct Triangulation {
  int k = 0;
  std::vector<std::vector<Vector>> simplices;  // each holds k+1 ambient points
};

inline Triangulation triangulate_points(const std::vector<Vector>& raw) {
  Triangulation out;
  auto pts = dedupe_points(raw);
  if (pts.empty()) throw EmptySetError("triangulate: no points");
  const int n = static_cast<int>(pts[0].size());
  Vector c = Vector::Zero(n);
  for (const auto& p : pts) c += p;
  c /= static_cast<double>(pts.size());
  Matrix B = affine_basis(pts, c);
  out.k = static_cast<int>(B.cols());
  if (out.k == 0) {
    out.simplices.push_back({pts[0]});
    return out;
  }
  if (out.k == 1) {
    double tmin = std::numeric_limits<double>::infinity();
    double tmax = -tmin;
    size_t imin = 0, imax = 0;
    for (size_t i = 0; i < pts.size(); ++i) {
      const double t = B.col(0).dot(pts[i] - c);
      if (t < tmin) {
        tmin = t;
        imin = i;
      }
      if (t > tmax) {
        tmax = t;
        imax = i;
      }
    }
    out.simplices.push_back({pts[imin], pts[imax]});
    return out;
  }

  std::vector<Vector> Y(pts.size());
  double yscale = 0.0;
  for (size_t i = 0; i < pts.size(); ++i) {
    Y[i] = B.transpose() * (pts[i] - c);
    yscale = std::max(yscale, Y[i].norm());
  }
  Matrix R;
  Vector r;
  hull_local(Y, R, r);
  const double tol = 1e-7 * (1.0 + yscale);
  for (int j = 0; j < R.rows(); ++j) {
    std::vector<Vector> facet;
    for (size_t i = 0; i < pts.size(); ++i)
      if (std::abs(R.row(j).dot(Y[i]) - r[j]) <= tol) facet.push_back(pts[i]);
    if (static_cast<int>(facet.size()) < out.k) continue;
    auto sub = triangulate_points(facet);
    if (sub.k != out.k - 1) continue;  // degenerate sliver, measure zero
    for (auto& s : sub.simplices) {
      s.push_back(c);
      out.simplices.push_back(std::move(s));
    }
  }
  return out;
}

}  // namespace detail

// Convex hull of a finite point set as a halfspace polytope.  Degenerate
// clouds are handled by hulling inside their affine span and pinning the
// orthogonal complement with paired equality rows.
inline HPolytope hull(const std::vector<Vector>& raw) {
  auto pts = detail::dedupe_points(raw);
  if (pts.empty()) throw EmptySetError("hull: no points");
  const int n = static_cast<int>(pts[0].size());
  for (const auto& p : pts)
    if (p.size() != n) throw DimensionMismatch("hull: mixed point dimensions");
  Vector c = Vector::Zero(n);
  for (const auto& p : pts) c += p;
  c /= static_cast<double>(pts.size());
  Matrix B = detail::affine_basis(pts, c);
  const int k = static_cast<int>(B.cols());

  Matrix R;
  Vector r;
  if (k >= 1) {
    std::vector<Vector> Y(pts.size());
    for (size_t i = 0; i < pts.size(); ++i) Y[i] = B.transpose() * (pts[i] - c);
    if (k == 1) {
      double lo = std::numeric_limits<double>::infinity(), hi = -lo;
      for (const auto& y : Y) {
        lo = std::min(lo, y[0]);
        hi = std::max(hi, y[0]);
      }
      R.resize(2, 1);
      r.resize(2);
      R << 1.0, -1.0;
      r << hi, -lo;
    } else {
      detail::hull_local(Y, R, r);
    }
  }

  Matrix C = detail::orthogonal_complement(B);
  const int rows = (k >= 1 ? static_cast<int>(R.rows()) : 0) + 2 * static_cast<int>(C.cols());
  Matrix G(rows, n);
  Vector g(rows);
  int at = 0;
  for (int j = 0; k >= 1 && j < R.rows(); ++j, ++at) {
    G.row(at) = R.row(j) * B.transpose();
    g[at] = r[j] + R.row(j).dot(B.transpose() * c);
  }
  for (int j = 0; j < C.cols(); ++j) {
    G.row(at) = C.col(j).transpose();
    g[at] = C.col(j).dot(c);
    ++at;
    G.row(at) = -C.col(j).transpose();
    g[at] = -C.col(j).dot(c);
    ++at;
  }
  return HPolytope(G, g);
}

inline HPolytope hull(const VPolytope& V) { return hull(V.points); }

// Exact volume by centroid-fan triangulation of the vertex set; zero for
// sets that are flat in their ambient space.
inline double volume(const HPolytope& P, double eps = 1e-9) {
  if (P.explicitly_empty() || is_empty(P, eps)) return 0.0;
  const int n = P.dim();
  if (n == 0) return 0.0;
  auto V = vertices(P, eps);
  auto tri = detail::triangulate_points(V);
  if (tri.k < n) return 0.0;
  double nfact = 1.0;
  for (int i = 2; i <= n; ++i) nfact *= i;
  double vol = 0.0;
  Matrix D(n, n);
  for (const auto& s : tri.simplices) {
    for (int i = 0; i < n; ++i) D.col(i) = s[i + 1] - s[0];
    vol += std::abs(D.determinant()) / nfact;
  }
  return vol;
}

}  // namespace polyreach
