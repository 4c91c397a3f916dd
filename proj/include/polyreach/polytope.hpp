#pragma once

#include <algorithm>
#include <utility>
#include <vector>

#include "polyreach/base.hpp"
#include "polyreach/lp.hpp"

namespace polyreach {

// Convex polyhedron {x : Gx <= g} in halfspace form.
//
// Construction canonicalizes: rows are scaled to unit Euclidean norm, zero
// rows with nonnegative offset are dropped, and a zero row with negative
// offset collapses the object to an explicit empty marker (a single zero row
// with offset -1).  The dimension survives canonicalization, so empty and
// row-free (whole space) objects still know their ambient space.
class HPolytope {
 public:
  HPolytope() : dim_(0) {}

  HPolytope(const Matrix& G, const Vector& g) : dim_(static_cast<int>(G.cols())) {
    if (G.rows() != g.size()) throw DimensionMismatch("HPolytope: G rows vs g size");
    const int m = static_cast<int>(G.rows());
    std::vector<int> keep;
    keep.reserve(m);
    bool impossible = false;
    for (int i = 0; i < m; ++i) {
      const double nrm = G.row(i).norm();
      if (nrm < 1e-12) {
        if (g[i] < -1e-12) impossible = true;
        continue;  // 0'x <= g with g >= 0 is vacuous
      }
      keep.push_back(i);
    }
    if (impossible) {
      mark_empty();
      return;
    }
    G_.resize(static_cast<int>(keep.size()), dim_);
    g_.resize(static_cast<int>(keep.size()));
    for (size_t k = 0; k < keep.size(); ++k) {
      const double nrm = G.row(keep[k]).norm();
      G_.row(static_cast<int>(k)) = G.row(keep[k]) / nrm;
      g_[static_cast<int>(k)] = g[keep[k]] / nrm;
    }
  }

  static HPolytope whole(int dim) {
    HPolytope P;
    P.dim_ = dim;
    P.G_.resize(0, dim);
    P.g_.resize(0);
    return P;
  }

  static HPolytope empty(int dim) {
    HPolytope P;
    P.dim_ = dim;
    P.mark_empty();
    return P;
  }

  static HPolytope box(const Vector& lo, const Vector& hi) {
    const int n = static_cast<int>(lo.size());
    if (hi.size() != n) throw DimensionMismatch("box: lo vs hi");
    Matrix G = Matrix::Zero(2 * n, n);
    Vector g(2 * n);
    for (int i = 0; i < n; ++i) {
      G(2 * i, i) = 1.0;
      g[2 * i] = hi[i];
      G(2 * i + 1, i) = -1.0;
      g[2 * i + 1] = -lo[i];
    }
    return HPolytope(G, g);
  }

  static HPolytope box(int dim, double radius) {
    return box(Vector::Constant(dim, -radius), Vector::Constant(dim, radius));
  }

  int dim() const { return dim_; }
  int rows() const { return static_cast<int>(G_.rows()); }
  const Matrix& G() const { return G_; }
  const Vector& g() const { return g_; }
  bool explicitly_empty() const { return empty_; }

 private:
  void mark_empty() {
    empty_ = true;
    G_ = Matrix::Zero(1, dim_);
    g_ = Vector::Constant(1, -1.0);
  }

  Matrix G_;
  Vector g_;
  int dim_ = 0;
  bool empty_ = false;
};

// Finite point cloud whose convex hull is the represented set.
struct VPolytope {
  int dim = 0;
  std::vector<Vector> points;
};

// Finite union of halfspace pieces over a common ambient space.
struct PolyUnion {
  int dim = 0;
  std::vector<HPolytope> pieces;
};

inline double support(const HPolytope& P, const Vector& q, double eps = 1e-9) {
  if (P.explicitly_empty()) throw EmptySetError("support: empty set");
  if (q.size() != P.dim()) throw DimensionMismatch("support: direction dimension");
  auto r = lp_solve(q, P.G(), P.g(), LpSense::Max, eps);
  if (r.status == LpStatus::Infeasible) throw EmptySetError("support: empty set");
  if (r.status == LpStatus::Unbounded) throw UnboundedError("support: unbounded direction");
  return r.value;
}

inline bool is_empty(const HPolytope& P, double eps = 1e-9) {
  if (P.explicitly_empty()) return true;
  if (P.rows() == 0) return false;
  auto r = lp_solve(Vector::Zero(P.dim()), P.G(), P.g(), LpSense::Max, eps);
  return r.status == LpStatus::Infeasible;
}

inline bool contains_point(const HPolytope& P, const Vector& x, double tol = 1e-9) {
  if (P.explicitly_empty()) return false;
  if (x.size() != P.dim()) throw DimensionMismatch("contains_point: point dimension");
  if (P.rows() == 0) return true;
  return ((P.G() * x - P.g()).array() <= tol).all();
}

// outer >= inner by support comparison row by row.
inline bool contains_set(const HPolytope& outer, const HPolytope& inner, double tol = 1e-7) {
  if (outer.dim() != inner.dim()) throw DimensionMismatch("contains_set: dimensions");
  if (inner.explicitly_empty() || is_empty(inner)) return true;
  if (outer.explicitly_empty()) return false;
  for (int j = 0; j < outer.rows(); ++j) {
    double h;
    try {
      h = support(inner, outer.G().row(j).transpose());
    } catch (const UnboundedError&) {
      return false;
    }
    if (h > outer.g()[j] + tol) return false;
  }
  return true;
}

inline HPolytope intersect(const HPolytope& P, const HPolytope& Q) {
  if (P.dim() != Q.dim()) throw DimensionMismatch("intersect: dimensions");
  if (P.explicitly_empty() || Q.explicitly_empty()) return HPolytope::empty(P.dim());
  Matrix G(P.rows() + Q.rows(), P.dim());
  Vector g(P.rows() + Q.rows());
  G << P.G(), Q.G();
  g << P.g(), Q.g();
  return HPolytope(G, g);
}

// Keeps exactly the rows whose removal would grow the set.  Duplicate rows
// (same direction, larger offset) are merged first to cut down on LPs.
inline HPolytope remove_redundancy(const HPolytope& P, double eps = 1e-9) {
  if (P.explicitly_empty()) return P;
  if (P.rows() == 0) return P;
  if (is_empty(P, eps)) return HPolytope::empty(P.dim());

  const int m = P.rows();
  std::vector<bool> alive(m, true);
  for (int i = 0; i < m; ++i) {
    if (!alive[i]) continue;
    for (int j = i + 1; j < m; ++j) {
      if (!alive[j]) continue;
      if ((P.G().row(i) - P.G().row(j)).norm() < 1e-9) {
        if (P.g()[j] < P.g()[i]) {
          alive[i] = false;
          break;
        }
        alive[j] = false;
      }
    }
  }

  const double scale = 1.0 + P.g().cwiseAbs().maxCoeff();
  for (int j = 0; j < m; ++j) {
    if (!alive[j]) continue;
    int rest = 0;
    for (int i = 0; i < m; ++i)
      if (alive[i] && i != j) ++rest;
    if (rest == 0) continue;
    Matrix Gr(rest, P.dim());
    Vector gr(rest);
    int k = 0;
    for (int i = 0; i < m; ++i) {
      if (!alive[i] || i == j) continue;
      Gr.row(k) = P.G().row(i);
      gr[k] = P.g()[i];
      ++k;
    }
    auto r = lp_solve(P.G().row(j).transpose(), Gr, gr, LpSense::Max, eps);
    if (r.status == LpStatus::Optimal && r.value <= P.g()[j] + eps * scale) alive[j] = false;
  }

  int kept = 0;
  for (int i = 0; i < m; ++i)
    if (alive[i]) ++kept;
  Matrix G(kept, P.dim());
  Vector g(kept);
  int k = 0;
  for (int i = 0; i < m; ++i) {
    if (!alive[i]) continue;
    G.row(k) = P.G().row(i);
    g[k] = P.g()[i];
    ++k;
  }
  return HPolytope(G, g);
}

inline bool is_bounded(const HPolytope& P, double eps = 1e-9) {
  if (P.explicitly_empty()) return true;
  if (P.rows() == 0) return P.dim() == 0;
  for (int i = 0; i < P.dim(); ++i) {
    Vector q = Vector::Zero(P.dim());
    for (double s : {1.0, -1.0}) {
      q[i] = s;
      auto r = lp_solve(q, P.G(), P.g(), LpSense::Max, eps);
      if (r.status == LpStatus::Unbounded) return false;
      if (r.status == LpStatus::Infeasible) return true;
    }
  }
  return true;
}

inline std::pair<Vector, Vector> bounding_box(const HPolytope& P, double eps = 1e-9) {
  if (P.explicitly_empty() || is_empty(P, eps)) throw EmptySetError("bounding_box: empty set");
  const int n = P.dim();
  Vector lo(n), hi(n);
  for (int i = 0; i < n; ++i) {
    Vector q = Vector::Zero(n);
    q[i] = 1.0;
    hi[i] = support(P, q, eps);
    q[i] = -1.0;
    lo[i] = -support(P, q, eps);
  }
  return {lo, hi};
}

// Center and radius of the largest inscribed ball.  Radius is negative when
// the set is empty and the LP is unbounded when the set has an unbounded
// interior direction.
inline std::pair<Vector, double> chebyshev_center(const HPolytope& P, double eps = 1e-9) {
  if (P.explicitly_empty()) throw EmptySetError("chebyshev_center: empty set");
  const int n = P.dim();
  if (P.rows() == 0) throw UnboundedError("chebyshev_center: whole space");
  Matrix G(P.rows(), n + 1);
  G.leftCols(n) = P.G();
  G.col(n).setOnes();  // rows are unit norm, so the ball constraint is G x + r <= g
  Vector c = Vector::Zero(n + 1);
  c[n] = 1.0;
  auto r = lp_solve(c, G, P.g(), LpSense::Max, eps);
  if (r.status == LpStatus::Unbounded) throw UnboundedError("chebyshev_center: unbounded set");
  if (r.status != LpStatus::Optimal) throw NumericalFailure("chebyshev_center: solver failed");
  return {r.x.head(n), r.value};
}

// Compact and convex with the origin in the interior: bounded and, after row
// normalization, strictly positive offsets.
inline bool is_cset(const HPolytope& P, double eps = 1e-9) {
  if (P.explicitly_empty() || P.rows() == 0) return false;
  if (P.g().minCoeff() <= eps) return false;
  return is_bounded(P, eps);
}

// {x : x + Q subset of P}; one support evaluation per row of P.
inline HPolytope erode(const HPolytope& P, const HPolytope& Q) {
  if (P.dim() != Q.dim()) throw DimensionMismatch("erode: dimensions");
  if (P.explicitly_empty()) return P;
  if (Q.explicitly_empty() || is_empty(Q)) throw EmptySetError("erode: empty structuring set");
  Vector g(P.rows());
  for (int j = 0; j < P.rows(); ++j) {
    try {
      g[j] = P.g()[j] - support(Q, P.G().row(j).transpose());
    } catch (const UnboundedError&) {
      return HPolytope::empty(P.dim());
    }
  }
  return HPolytope(P.G(), g);
}

// Erosion by the convex hull of a finite point set, without building it.
inline HPolytope erode(const HPolytope& P, const std::vector<Vector>& pts) {
  if (P.explicitly_empty()) return P;
  if (pts.empty()) throw EmptySetError("erode: no points");
  Vector g(P.rows());
  for (int j = 0; j < P.rows(); ++j) {
    double h = -std::numeric_limits<double>::infinity();
    for (const auto& p : pts) h = std::max(h, P.G().row(j).dot(p));
    g[j] = P.g()[j] - h;
  }
  return HPolytope(P.G(), g);
}

// {z : Mz + b in P}
inline HPolytope affine_preimage(const HPolytope& P, const Matrix& M, const Vector& b) {
  if (M.rows() != P.dim() || b.size() != P.dim())
    throw DimensionMismatch("affine_preimage: map dimensions");
  if (P.explicitly_empty()) return HPolytope::empty(static_cast<int>(M.cols()));
  return HPolytope(P.G() * M, P.g() - P.G() * b);
}

// Fixes coordinates `dims` (0-based) to `vals`; remaining coordinates keep
// their relative order.
inline HPolytope slice(const HPolytope& P, const std::vector<int>& dims, const Vector& vals) {
  const int n = P.dim();
  if (static_cast<int>(dims.size()) != vals.size()) throw DimensionMismatch("slice: dims vs vals");
  std::vector<bool> fixed(n, false);
  for (int d : dims) {
    if (d < 0 || d >= n) throw IndexOutOfRange("slice: dimension index");
    if (fixed[d]) throw IndexOutOfRange("slice: repeated dimension");
    fixed[d] = true;
  }
  const int k = n - static_cast<int>(dims.size());
  if (P.explicitly_empty()) return HPolytope::empty(k);
  Matrix M = Matrix::Zero(n, k);
  Vector b = Vector::Zero(n);
  int col = 0;
  for (int i = 0; i < n; ++i)
    if (!fixed[i]) M(i, col++) = 1.0;
  for (size_t t = 0; t < dims.size(); ++t) b[dims[t]] = vals[static_cast<int>(t)];
  return affine_preimage(P, M, b);
}

inline HPolytope scale(const HPolytope& P, double lambda) {
  if (lambda <= 0.0) throw NumericalFailure("scale: factor must be positive");
  if (P.explicitly_empty()) return P;
  return HPolytope(P.G(), lambda * P.g());
}

inline HPolytope translate(const HPolytope& P, const Vector& v) {
  if (v.size() != P.dim()) throw DimensionMismatch("translate: vector dimension");
  if (P.explicitly_empty()) return P;
  return HPolytope(P.G(), P.g() + P.G() * v);
}

}  // namespace polyreach
