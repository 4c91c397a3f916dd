#pragma once

// State-dependent admissible-attack sets and their worst-case linearization.
//
// An attack set is a polytope in attack space whose right-hand side moves
// affinely with the augmented state z:
//
//   A(z) = { a : Ga a <= h0 + Hz z }.
//
// Builders assemble the three stealth conditions (plausible actuation,
// plausible measurements, quiet detector) for the attacked channel widths
// only; unattacked widths contribute no rows.  `robustify` converts the
// state-dependent worst case  max_{a in A(z)} q.a  into an explicit lower
// envelope of affine forms via the dual program, together with certificates
// for the states where A(z) is empty.

#include <algorithm>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "polyreach/geometry.hpp"

namespace polyreach {

class ParamPolytope {
 public:
  ParamPolytope() : ga_(0, 0), h0_(0), hz_(0, 0) {}

  ParamPolytope(Matrix Ga, Vector h0, Matrix Hz)
      : ga_(std::move(Ga)), h0_(std::move(h0)), hz_(std::move(Hz)) {
    if (ga_.rows() != h0_.size() || ga_.rows() != hz_.rows())
      throw DimensionMismatch("attack set blocks disagree on row count");
  }

  int rows() const { return static_cast<int>(ga_.rows()); }
  int na() const { return static_cast<int>(ga_.cols()); }
  int nz() const { return static_cast<int>(hz_.cols()); }
  const Matrix& Ga() const { return ga_; }
  const Vector& h0() const { return h0_; }
  const Matrix& Hz() const { return hz_; }

 private:
  Matrix ga_;
  Vector h0_;
  Matrix hz_;
};

// Fixes the attack set at a concrete state.
inline HPolytope eval_at(const ParamPolytope& A, const Vector& z) {
  if (z.size() != A.nz())
    throw DimensionMismatch("state dimension does not match the attack set");
  if (A.rows() == 0) return HPolytope(Matrix::Zero(0, A.na()), Vector(0));
  return HPolytope(A.Ga(), Vector(A.h0() + A.Hz() * z));
}

namespace detail {

inline void append_bound_rows(const HPolytope* bounds, int na, Matrix& Ga,
                              Vector& h0, Matrix& Hz) {
  if (bounds == nullptr || na == 0) return;
  if (bounds->dim() != na)
    throw DimensionMismatch("attack bound dimension mismatch");
  const int base = static_cast<int>(Ga.rows());
  const int extra = bounds->rows();
  Ga.conservativeResize(base + extra, Eigen::NoChange);
  h0.conservativeResize(base + extra);
  Hz.conservativeResize(base + extra, Eigen::NoChange);
  Ga.bottomRows(extra) = bounds->G();
  h0.tail(extra) = bounds->g();
  Hz.bottomRows(extra).setZero();
}

// Worst-case offsets of a noise polytope against each constraint row.
inline Vector noise_margin(const Matrix& G, const HPolytope& W) {
  Vector m(G.rows());
  for (int i = 0; i < G.rows(); ++i) m[i] = support(W, Vector(G.row(i).transpose()));
  return m;
}

}  // namespace detail

// Attacks on the actuation channel: the corrupted input u(z) + Gu a must be
// producible, i.e. stay inside the input constraint set, for u(z) = -K(x - e).
inline ParamPolytope build_input_set(const Matrix& gamma_u, const HPolytope& U,
                                     const Matrix& K,
                                     const HPolytope* bounds = nullptr) {
  const int n = static_cast<int>(K.cols());
  const int na = static_cast<int>(gamma_u.cols());
  if (na == 0) return ParamPolytope(Matrix::Zero(0, 0), Vector(0), Matrix::Zero(0, 2 * n));
  if (gamma_u.rows() != U.dim() || K.rows() != U.dim())
    throw DimensionMismatch("input channel dimensions disagree");
  const int m = U.rows();
  Matrix Ga = U.G() * gamma_u;
  Vector h0 = U.g();
  Matrix Hz(m, 2 * n);
  Hz.leftCols(n) = U.G() * K;
  Hz.rightCols(n) = -U.G() * K;
  detail::append_bound_rows(bounds, na, Ga, h0, Hz);
  return ParamPolytope(std::move(Ga), std::move(h0), std::move(Hz));
}

// Attacks on the measurement channel: the forged reading Cp x + w + Gy a must
// look like a plausible output for every admissible noise w.
inline ParamPolytope build_output_set(const Matrix& gamma_y, const HPolytope& Y,
                                      const HPolytope& W, const Matrix& Cp,
                                      const HPolytope* bounds = nullptr) {
  const int n = static_cast<int>(Cp.cols());
  const int na = static_cast<int>(gamma_y.cols());
  if (na == 0) return ParamPolytope(Matrix::Zero(0, 0), Vector(0), Matrix::Zero(0, 2 * n));
  if (gamma_y.rows() != Y.dim() || Cp.rows() != Y.dim())
    throw DimensionMismatch("output channel dimensions disagree");
  const int m = Y.rows();
  Matrix Ga = Y.G() * gamma_y;
  Vector h0 = Y.g() - detail::noise_margin(Y.G(), W);
  Matrix Hz(m, 2 * n);
  Hz.leftCols(n) = -Y.G() * Cp;
  Hz.rightCols(n).setZero();
  detail::append_bound_rows(bounds, na, Ga, h0, Hz);
  return ParamPolytope(std::move(Ga), std::move(h0), std::move(Hz));
}

// Quiet-detector condition: the residual Cp e + w + Gy a must stay inside the
// detector threshold set for every admissible noise w.  With no attacked
// sensors the rows lose their attack part and gate the states whose residual
// is quiet on their own.
inline ParamPolytope build_residual_set(const Matrix& gamma_y, const HPolytope& R,
                                        const HPolytope& W, const Matrix& Cp) {
  const int n = static_cast<int>(Cp.cols());
  if (gamma_y.rows() != R.dim() || Cp.rows() != R.dim())
    throw DimensionMismatch("residual channel dimensions disagree");
  const int m = R.rows();
  Matrix Ga = R.G() * gamma_y;
  Vector h0 = R.g() - detail::noise_margin(R.G(), W);
  Matrix Hz(m, 2 * n);
  Hz.leftCols(n).setZero();
  Hz.rightCols(n) = -R.G() * Cp;
  return ParamPolytope(std::move(Ga), std::move(h0), std::move(Hz));
}

// Stacks the input block and the two measurement blocks over a = (a_u, a_y).
inline ParamPolytope product_set(const ParamPolytope& Au, const ParamPolytope& Ay,
                                 const ParamPolytope& Ar) {
  if (Ay.na() != Ar.na())
    throw DimensionMismatch("output and residual blocks must share the attack width");
  const int nu = Au.na();
  const int ny = Ay.na();
  const int nz = std::max({Au.nz(), Ay.nz(), Ar.nz()});
  for (const auto* part : {&Au, &Ay, &Ar})
    if (part->rows() > 0 && part->nz() != nz)
      throw DimensionMismatch("attack blocks disagree on the state dimension");
  const int rows = Au.rows() + Ay.rows() + Ar.rows();
  Matrix Ga = Matrix::Zero(rows, nu + ny);
  Vector h0(rows);
  Matrix Hz = Matrix::Zero(rows, nz);
  int at = 0;
  if (Au.rows() > 0) {
    Ga.block(at, 0, Au.rows(), nu) = Au.Ga();
    h0.segment(at, Au.rows()) = Au.h0();
    Hz.middleRows(at, Au.rows()) = Au.Hz();
    at += Au.rows();
  }
  for (const auto* part : {&Ay, &Ar}) {
    if (part->rows() == 0) continue;
    Ga.block(at, nu, part->rows(), ny) = part->Ga();
    h0.segment(at, part->rows()) = part->h0();
    Hz.middleRows(at, part->rows()) = part->Hz();
    at += part->rows();
  }
  return ParamPolytope(std::move(Ga), std::move(h0), std::move(Hz));
}

struct AffineForm {
  Vector c;
  double d = 0.0;
};

// Worst case of q.a over A(z), expressed without the inner optimization:
//   value(z) = min_k  forms[k].c . z + forms[k].d      (on states with A(z) nonempty)
//   A(z) is empty  iff  some ray satisfies  ray.c . z + ray.d < 0.
struct RobustifiedRow {
  std::vector<AffineForm> forms;
  std::vector<AffineForm> rays;
};

inline bool infeasible_at(const RobustifiedRow& row, const Vector& z, double eps = 0.0) {
  for (const auto& r : row.rays)
    if (r.c.dot(z) + r.d < -eps) return true;
  return false;
}

namespace detail {

struct BasicPoints {
  std::vector<Vector> points;
  bool consistent = true;
};

// All basic feasible points of { y >= 0 : M y = rhs }, i.e. the vertex set.
inline BasicPoints basic_feasible_points(const Matrix& M, const Vector& rhs,
                                         int max_bases) {
  BasicPoints out;
  const int m = static_cast<int>(M.cols());
  const double scale = std::max({1.0, M.size() > 0 ? M.cwiseAbs().maxCoeff() : 0.0,
                                 rhs.size() > 0 ? rhs.cwiseAbs().maxCoeff() : 0.0});
  const double res_tol = 1e-8 * scale;
  if (m == 0) {
    out.consistent = rhs.size() == 0 || rhs.cwiseAbs().maxCoeff() <= res_tol;
    if (out.consistent) out.points.push_back(Vector(0));
    return out;
  }
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(M);
  const int rank = static_cast<int>(cod.rank());
  Vector ls = cod.solve(rhs);
  if ((M * ls - rhs).cwiseAbs().maxCoeff() > res_tol) {
    out.consistent = false;
    return out;
  }
  if (rank == 0) {
    out.points.push_back(Vector::Zero(m));
    return out;
  }
  double count = 1.0;
  for (int i = 0; i < rank; ++i) count *= static_cast<double>(m - i) / (i + 1);
  if (count > static_cast<double>(max_bases))
    throw EnumerationOverflow("too many candidate dual bases");

  std::vector<int> idx(rank);
  for (int i = 0; i < rank; ++i) idx[i] = i;
  Matrix Ms(M.rows(), rank);
  while (true) {
    for (int i = 0; i < rank; ++i) Ms.col(i) = M.col(idx[i]);
    Eigen::ColPivHouseholderQR<Matrix> qr(Ms);
    if (static_cast<int>(qr.rank()) == rank) {
      Vector ys = qr.solve(rhs);
      if ((Ms * ys - rhs).cwiseAbs().maxCoeff() <= res_tol &&
          ys.minCoeff() >= -1e-9 * scale) {
        Vector y = Vector::Zero(m);
        for (int i = 0; i < rank; ++i) y[idx[i]] = std::max(0.0, ys[i]);
        bool dup = false;
        for (const auto& p : out.points)
          if ((p - y).cwiseAbs().maxCoeff() <= 1e-8 * (1.0 + y.cwiseAbs().maxCoeff())) {
            dup = true;
            break;
          }
        if (!dup) out.points.push_back(std::move(y));
      }
    }
    int pos = rank - 1;
    while (pos >= 0 && idx[pos] == m - rank + pos) --pos;
    if (pos < 0) break;
    ++idx[pos];
    for (int i = pos + 1; i < rank; ++i) idx[i] = idx[i - 1] + 1;
  }
  return out;
}

inline void dedupe_forms(std::vector<AffineForm>& forms) {
  std::vector<AffineForm> kept;
  for (auto& f : forms) {
    bool dup = false;
    for (const auto& k : kept) {
      const double sc = 1.0 + std::max(k.c.cwiseAbs().maxCoeff(), std::abs(k.d));
      if ((k.c - f.c).cwiseAbs().maxCoeff() <= 1e-9 * sc && std::abs(k.d - f.d) <= 1e-9 * sc) {
        dup = true;
        break;
      }
    }
    if (!dup) kept.push_back(std::move(f));
  }
  forms = std::move(kept);
}

// Keeps a minimal subset of forms whose pointwise minimum matches the lower
// envelope on Z up to 1e-9: a form is added only where it strictly improves
// on the forms already kept, so exact ties collapse to one representative.
inline void prune_envelope(std::vector<AffineForm>& forms, const HPolytope& Z) {
  if (forms.size() <= 1) return;
  const int nz = Z.dim();
  std::vector<AffineForm> kept;
  for (std::size_t k = 0; k < forms.size(); ++k) {
    if (kept.empty()) {
      kept.push_back(forms[k]);
      continue;
    }
    Matrix G(Z.rows() + kept.size(), nz + 1);
    Vector g(Z.rows() + kept.size());
    G.topLeftCorner(Z.rows(), nz) = Z.G();
    G.topRightCorner(Z.rows(), 1).setZero();
    g.head(Z.rows()) = Z.g();
    int at = Z.rows();
    for (const auto& f : kept) {
      G.block(at, 0, 1, nz) = (forms[k].c - f.c).transpose();
      G(at, nz) = 1.0;
      g[at] = f.d - forms[k].d;
      ++at;
    }
    Vector obj = Vector::Zero(nz + 1);
    obj[nz] = 1.0;
    auto lp = lp_solve(obj, G, g);
    if (lp.status != LpStatus::Optimal || lp.value > 1e-9) kept.push_back(forms[k]);
  }
  forms = std::move(kept);
}

}  // namespace detail

// Resolves max_{a in A(z)} q.a into affine forms of z via the dual program
// { y >= 0 : Ga^T y = q }: each dual vertex y gives the form
// (Hz^T y, h0^T y); each extreme dual ray flags the states where A(z) = {}.
// Pass the state constraint set Z to drop forms and rays that never matter
// on it.  Throws DualInfeasible when the inner program is unbounded.
inline RobustifiedRow robustify(const Vector& q, const ParamPolytope& A,
                                const HPolytope* Z = nullptr,
                                int max_bases = 250000) {
  if (q.size() != A.na())
    throw DimensionMismatch("objective does not match the attack width");
  const Matrix M = A.Ga().transpose();
  auto verts = detail::basic_feasible_points(M, q, max_bases);
  if (!verts.consistent)
    throw DualInfeasible("worst-case attack direction is unbounded (outside the row span)");
  if (verts.points.empty())
    throw DualInfeasible("worst-case attack program is unbounded");

  RobustifiedRow row;
  for (const auto& y : verts.points)
    row.forms.push_back({Vector(A.Hz().transpose() * y), A.h0().dot(y)});
  detail::dedupe_forms(row.forms);

  Matrix Mr(M.rows() + 1, M.cols());
  Mr.topRows(M.rows()) = M;
  Mr.bottomRows(1).setOnes();
  Vector rr = Vector::Zero(M.rows() + 1);
  rr[M.rows()] = 1.0;
  auto rays = detail::basic_feasible_points(Mr, rr, max_bases);
  if (rays.consistent) {
    for (const auto& y : rays.points) {
      AffineForm f{Vector(A.Hz().transpose() * y), A.h0().dot(y)};
      // a ray whose region can never fire carries no information
      if (f.c.cwiseAbs().maxCoeff() <= 1e-12 && f.d >= -1e-12) continue;
      row.rays.push_back(std::move(f));
    }
    detail::dedupe_forms(row.rays);
  }

  if (Z != nullptr) {
    detail::prune_envelope(row.forms, *Z);
    std::vector<AffineForm> live;
    for (auto& r : row.rays) {
      auto lp = lp_solve(Vector(-r.c), Z->G(), Z->g());
      // keep unless the region is strictly unreachable within Z
      if (lp.status != LpStatus::Optimal || -lp.value + r.d <= 1e-7)
        live.push_back(std::move(r));
    }
    row.rays = std::move(live);
  }
  return row;
}

}  // namespace polyreach
