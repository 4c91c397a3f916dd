#pragma once

#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include "polyreach/hull.hpp"
#include "polyreach/rng.hpp"

namespace polyreach {

// Exact vertex-image Minkowski sum: pairwise vertex sums hulled back to
// halfspace form.  Both operands must be bounded.
inline HPolytope minkowski_sum(const HPolytope& P, const HPolytope& Q) {
  if (P.dim() != Q.dim()) throw DimensionMismatch("minkowski_sum: dimensions");
  if (P.explicitly_empty() || Q.explicitly_empty()) return HPolytope::empty(P.dim());
  auto vp = vertices(P);
  auto vq = vertices(Q);
  if (vp.size() * vq.size() > 200000u)
    throw EnumerationOverflow("minkowski_sum: vertex product too large");
  std::vector<Vector> sums;
  sums.reserve(vp.size() * vq.size());
  for (const auto& a : vp)
    for (const auto& b : vq) sums.push_back(a + b);
  return hull(sums);
}

// {Mx + b : x in P} via vertex images; exact for bounded P and any M.
inline HPolytope affine_image(const HPolytope& P, const Matrix& M, const Vector& b) {
  if (M.cols() != P.dim() || b.size() != M.rows())
    throw DimensionMismatch("affine_image: map dimensions");
  if (P.explicitly_empty()) return HPolytope::empty(static_cast<int>(M.rows()));
  auto vp = vertices(P);
  std::vector<Vector> img;
  img.reserve(vp.size());
  for (const auto& v : vp) img.push_back(M * v + b);
  return hull(img);
}

// Largest lambda with lambda*S1 inside S2; both must be compact convex sets
// with the origin interior.  One support call per facet of S2.
inline double minkowski_distance(const HPolytope& S1, const HPolytope& S2, double eps = 1e-9) {
  if (S1.dim() != S2.dim()) throw DimensionMismatch("minkowski_distance: dimensions");
  if (!is_cset(S1, eps)) throw NotCSet("minkowski_distance: first argument");
  if (!is_cset(S2, eps)) throw NotCSet("minkowski_distance: second argument");
  double mu = std::numeric_limits<double>::infinity();
  for (int j = 0; j < S2.rows(); ++j) {
    const double h = support(S1, S2.G().row(j).transpose(), eps);
    if (h <= 0.0) throw NumericalFailure("minkowski_distance: nonpositive support on a c-set");
    mu = std::min(mu, S2.g()[j] / h);
  }
  return mu;
}

inline PolyUnion union_prune(const PolyUnion& U, double tol = 1e-7) {
  PolyUnion out;
  out.dim = U.dim;
  std::vector<HPolytope> nonempty;
  for (const auto& p : U.pieces) {
    if (p.dim() != U.dim) throw DimensionMismatch("union_prune: piece dimension");
    if (!p.explicitly_empty() && !is_empty(p)) nonempty.push_back(p);
  }
  const int m = static_cast<int>(nonempty.size());
  std::vector<bool> alive(m, true);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m && alive[i]; ++j) {
      if (j == i || !alive[j]) continue;
      if (contains_set(nonempty[j], nonempty[i], tol)) alive[i] = false;
    }
  }
  for (int i = 0; i < m; ++i)
    if (alive[i]) out.pieces.push_back(nonempty[i]);
  return out;
}

inline bool union_contains_point(const PolyUnion& U, const Vector& x, double tol = 1e-9) {
  for (const auto& p : U.pieces)
    if (contains_point(p, x, tol)) return true;
  return false;
}

// Draws a point of P: rejection from the bounding box, falling back to
// hit-and-run from the incenter when the set is thin relative to its box.
inline Vector sample_point(const HPolytope& P, Rng& rng, int max_rejects = 128) {
  if (P.explicitly_empty()) throw EmptySetError("sample_point: empty set");
  auto [lo, hi] = bounding_box(P);
  const int n = P.dim();
  Vector x(n);
  for (int t = 0; t < max_rejects; ++t) {
    for (int i = 0; i < n; ++i) x[i] = rng.uniform(lo[i], hi[i]);
    if (contains_point(P, x, 0.0)) return x;
  }
  auto [c, radius] = chebyshev_center(P);
  if (radius < 0.0) throw EmptySetError("sample_point: empty set");
  x = c;
  for (int step = 0; step < 64; ++step) {
    Vector d = rng.unit_vector(n);
    double tlo = -std::numeric_limits<double>::infinity();
    double thi = std::numeric_limits<double>::infinity();
    for (int j = 0; j < P.rows(); ++j) {
      const double a = P.G().row(j).dot(d);
      const double s = P.g()[j] - P.G().row(j).dot(x);
      if (a > 1e-12)
        thi = std::min(thi, s / a);
      else if (a < -1e-12)
        tlo = std::max(tlo, s / a);
    }
    if (!(tlo <= thi) || !std::isfinite(tlo) || !std::isfinite(thi)) continue;
    x += rng.uniform(tlo, thi) * d;
  }
  return x;
}

// Union membership with a separation band: +1 clearly inside, -1 clearly
// outside every piece, 0 within `band` of a boundary.
inline int union_classify(const PolyUnion& U, const Vector& x, double band) {
  bool boundary = false;
  for (const auto& p : U.pieces) {
    if (p.explicitly_empty()) continue;
    const double worst = (p.G() * x - p.g()).maxCoeff();
    if (worst <= -band) return 1;
    if (worst <= band) boundary = true;
  }
  return boundary ? 0 : -1;
}

struct ContainResult {
  bool holds = false;
  bool exact = false;
};

// Exact cover test by region subtraction: peel every piece of the union off
// P, slicing the running remainder along one (eps-inflated) facet at a time,
// and certify coverage when nothing with an interior ball survives.  The
// remainder list can grow multiplicatively, so the number of splits is
// capped; nullopt means the budget ran out and the caller must fall back to
// sampling.
inline std::optional<bool> union_covers(const PolyUnion& U, const HPolytope& P, double eps,
                                        int budget = 4096) {
  if (P.explicitly_empty() || is_empty(P)) return true;
  std::vector<HPolytope> remainder{P};
  int splits = 0;
  for (const auto& q : U.pieces) {
    if (q.explicitly_empty()) continue;
    std::vector<HPolytope> next;
    for (const auto& r : remainder) {
      HPolytope cur = r;
      for (int j = 0; j < q.rows(); ++j) {
        const Matrix row = q.G().row(j);
        HPolytope outside = intersect(cur, HPolytope(-row, Vector::Constant(1, -(q.g()[j] + eps))));
        if (chebyshev_center(outside).second > 1e-9) {
          next.push_back(remove_redundancy(outside));
          if (++splits > budget) return std::nullopt;
        }
        cur = intersect(cur, HPolytope(row, Vector::Constant(1, q.g()[j] + eps)));
        if (is_empty(cur)) break;
      }
    }
    remainder = std::move(next);
    if (remainder.empty()) return true;
  }
  return remainder.empty();
}

// Is P inside the union?  A single swallowing piece or a successful region
// subtraction certifies the answer; only when the subtraction budget runs
// out does a seeded sample check decide, flagged as statistical.
inline ContainResult union_contains_set(const PolyUnion& U, const HPolytope& P,
                                        const Tolerances& tol, int samples = 0) {
  ContainResult res;
  if (P.explicitly_empty() || is_empty(P)) {
    res.holds = true;
    res.exact = true;
    return res;
  }
  for (const auto& piece : U.pieces)
    if (contains_set(piece, P, tol.eps_set)) {
      res.holds = true;
      res.exact = true;
      return res;
    }
  if (auto cover = union_covers(U, P, tol.eps_set); cover.has_value()) {
    res.holds = *cover;
    res.exact = true;
    return res;
  }
  if (samples <= 0) samples = std::max(200, tol.mc_samples / 20);
  Rng rng = Rng(tol.rng_seed).derive(0x5e7c0u);
  for (int k = 0; k < samples; ++k) {
    Vector x = sample_point(P, rng);
    if (union_classify(U, x, tol.eps_set) < 0) {
      res.exact = true;  // a concrete interior point outside the union
      return res;
    }
  }
  res.holds = true;
  return res;
}

struct EqualResult {
  bool equal = false;
  bool exact = false;
};

// Set equality of two unions by mutual piecewise containment.  Each piece is
// certified inside the other union by region subtraction where feasible; the
// verdict is flagged statistical only when some piece had to be decided by
// sampling.
inline EqualResult multiset_equal(const PolyUnion& A, const PolyUnion& B, const Tolerances& tol) {
  if (A.dim != B.dim) throw DimensionMismatch("multiset_equal: dimensions");
  PolyUnion Ap = union_prune(A, tol.eps_set);
  PolyUnion Bp = union_prune(B, tol.eps_set);
  EqualResult res;
  if (Ap.pieces.empty() || Bp.pieces.empty()) {
    res.equal = Ap.pieces.empty() && Bp.pieces.empty();
    res.exact = true;
    return res;
  }

  res.equal = true;
  res.exact = true;
  for (const auto& [from, into] : {std::pair{&Ap, &Bp}, std::pair{&Bp, &Ap}}) {
    for (const auto& piece : from->pieces) {
      const ContainResult c = union_contains_set(*into, piece, tol);
      if (!c.holds) {
        res.equal = false;
        res.exact = c.exact;
        return res;
      }
      res.exact = res.exact && c.exact;
    }
  }
  return res;
}

struct VolumeEstimate {
  double value = 0.0;
  double rel_err = 0.0;
  bool exact = false;
};

// Randomized quasi-Monte-Carlo volume of a union: shifted Halton streams
// over the joint bounding box, doubling the budget until the 95% confidence
// band is below tol.eps_vol or the round cap is hit.
inline VolumeEstimate union_volume(const PolyUnion& U, const Tolerances& tol) {
  PolyUnion W = union_prune(U, tol.eps_set);
  VolumeEstimate est;
  if (W.pieces.empty()) {
    est.exact = true;
    return est;
  }

  // pieces that overlap at most on shared facets sum exactly
  if (W.pieces.size() <= 64) {
    bool disjoint = true;
    for (std::size_t i = 0; i < W.pieces.size() && disjoint; ++i)
      for (std::size_t j = i + 1; j < W.pieces.size() && disjoint; ++j) {
        HPolytope both = intersect(W.pieces[i], W.pieces[j]);
        if (is_empty(both, tol.eps_feas)) continue;
        if (chebyshev_center(both).second > 1e-7) disjoint = false;
      }
    if (disjoint) {
      double total = 0.0;
      bool ok = true;
      for (const auto& p : W.pieces) {
        try {
          total += volume(p);
        } catch (const EnumerationOverflow&) {
          ok = false;
          break;
        }
      }
      if (ok) {
        est.value = total;
        est.exact = true;
        return est;
      }
    }
  }
  Vector lo, hi;
  bool first = true;
  for (const auto& p : W.pieces) {
    auto [plo, phi] = bounding_box(p);
    if (first) {
      lo = plo;
      hi = phi;
      first = false;
    } else {
      lo = lo.cwiseMin(plo);
      hi = hi.cwiseMax(phi);
    }
  }
  const int n = W.dim;
  double vbox = 1.0;
  for (int i = 0; i < n; ++i) vbox *= std::max(0.0, hi[i] - lo[i]);
  if (vbox <= 0.0) {
    est.exact = true;
    return est;
  }

  constexpr int kStreams = 8;
  Rng seeder = Rng(tol.rng_seed).derive(0x0b01u);
  std::vector<Vector> shifts;
  for (int s = 0; s < kStreams; ++s) {
    Rng r = seeder.derive(static_cast<std::uint64_t>(s));
    Vector sh(n);
    for (int i = 0; i < n; ++i) sh[i] = r.uniform();
    shifts.push_back(sh);
  }
  std::vector<std::uint64_t> seen(kStreams, 0), hits(kStreams, 0);
  std::uint64_t batch = static_cast<std::uint64_t>(std::max(256, tol.mc_samples / kStreams));
  for (int round = 0; round < 6; ++round) {
    for (int s = 0; s < kStreams; ++s) {
      for (std::uint64_t k = 0; k < batch; ++k) {
        Vector u = halton_point(seen[s] + k, n, &shifts[s]);
        Vector x = lo + u.cwiseProduct(hi - lo);
        if (union_contains_point(W, x, 0.0)) ++hits[s];
      }
      seen[s] += batch;
    }
    double mean = 0.0;
    std::vector<double> vals(kStreams);
    for (int s = 0; s < kStreams; ++s) {
      vals[s] = vbox * static_cast<double>(hits[s]) / static_cast<double>(seen[s]);
      mean += vals[s];
    }
    mean /= kStreams;
    double var = 0.0;
    for (double v : vals) var += (v - mean) * (v - mean);
    var /= (kStreams - 1);
    const double ci = 1.96 * std::sqrt(var / kStreams);
    est.value = mean;
    est.rel_err = mean > 0.0 ? ci / mean : 0.0;
    if (mean > 0.0 && est.rel_err <= tol.eps_vol) return est;
    batch *= 2;
  }
  return est;
}

}  // namespace polyreach
