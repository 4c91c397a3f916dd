#pragma once

// Set recursions for the switched, stealthily-attacked closed loop.
//
// A SwitchedSystem bundles the per-mode augmented dynamics, the per-mode
// state-dependent admissible-attack sets, and the switching graph whose edge
// labels select modes.  `phi_forward` maps sets one step forward through a
// mode; `psi_backward` computes the robust one-step predecessors (the states
// whose every admissible continuation stays inside a target); and
// `backward_sequence` runs the graph-coupled fixed-point recursion whose
// limit is the maximal safe set under every admissible attack run.
//
// All backward results are computed so that any approximation fallback only
// ever shrinks the set: a reported safe set is always actually safe.

#include <map>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "polyreach/attack_graph.hpp"
#include "polyreach/geometry.hpp"
#include "polyreach/model.hpp"
#include "polyreach/stealth.hpp"

namespace polyreach {

struct SwitchedSystem {
  std::vector<Mode> modes;             // modes[id-1]
  std::vector<ParamPolytope> attacks;  // admissible attacks per mode
  AttackGraph graph;                   // labels name modes via label_to_mode
  std::map<std::string, int> label_to_mode;  // 1-based mode ids
  HPolytope Z = HPolytope::whole(0);         // augmented-state constraint c-set
  HPolytope H = HPolytope::whole(0);         // disturbance c-set for (v, w)

  int nz() const { return Z.dim(); }
  int mode_index(const std::string& label) const {
    auto it = label_to_mode.find(label);
    if (it == label_to_mode.end()) throw Error("unknown mode label: " + label);
    return it->second - 1;
  }
  int node_index(const std::string& name) const {
    for (std::size_t i = 0; i < graph.nodes.size(); ++i)
      if (graph.nodes[i] == name) return static_cast<int>(i);
    throw Error("unknown graph node: " + name);
  }
};

// Per-channel attack description: where it enters, how it may switch, and the
// magnitude cap on the injected signal.
struct AttackChannel {
  ChannelPattern pattern;
  double bound = 0.0;
};

// Builds the full switched system for a plant under the given attack
// channels; with no channels the system degenerates to the attack-free loop.
inline SwitchedSystem assemble_system(const PlantModel& p, const Gains& gn,
                                      const HPolytope& R,
                                      const std::vector<AttackChannel>& channels,
                                      double e_max) {
  SwitchedSystem sys;
  auto ac = build_augmented_constraints(p, gn, e_max);
  sys.Z = ac.Z;
  sys.H = ac.H;
  const int n = static_cast<int>(p.A.rows());

  std::vector<ChannelSelection> selections;
  if (channels.empty()) {
    sys.graph.nodes = {"s"};
    sys.graph.edges = {{"s", "s", "N"}};
    sys.label_to_mode = {{"N", 1}};
    selections.push_back(ChannelSelection{});
  } else {
    std::vector<ChannelPattern> pats;
    for (const auto& ch : channels) pats.push_back(ch.pattern);
    auto table = compose_modes(pats);
    sys.graph = table.graph;
    sys.label_to_mode = table.label_to_mode;
    selections = table.selections;
  }

  auto bound_box = [&](const std::vector<int>& attacked, ChannelPattern::Kind kind) {
    Vector radius(static_cast<Eigen::Index>(attacked.size()));
    for (std::size_t i = 0; i < attacked.size(); ++i) {
      double b = 0.0;
      bool found = false;
      for (const auto& ch : channels)
        if (ch.pattern.kind == kind && ch.pattern.index == attacked[i]) {
          b = ch.bound;
          found = true;
        }
      if (!found) throw Error("attacked channel without a bound");
      radius[static_cast<Eigen::Index>(i)] = b;
    }
    return HPolytope::box(Vector(-radius), radius);
  };

  for (std::size_t k = 0; k < selections.size(); ++k) {
    const auto& sel = selections[k];
    Mode m = build_mode(p, gn, sel, static_cast<int>(k) + 1);
    ParamPolytope Au(Matrix::Zero(0, 0), Vector(0), Matrix::Zero(0, 2 * n));
    ParamPolytope Ay = Au, Ar = Au;
    if (!sel.inputs.empty()) {
      auto bu = bound_box(sel.inputs, ChannelPattern::Kind::Actuator);
      Au = build_input_set(m.gamma_u, p.U, gn.K, &bu);
    }
    if (!sel.outputs.empty()) {
      auto by = bound_box(sel.outputs, ChannelPattern::Kind::Sensor);
      Ay = build_output_set(m.gamma_y, p.Y, p.W, p.C, &by);
    }
    if (!sel.inputs.empty() || !sel.outputs.empty())
      Ar = build_residual_set(m.gamma_y, R, p.W, p.C);
    sys.attacks.push_back(product_set(Au, Ay, Ar));
    sys.modes.push_back(std::move(m));
  }
  return sys;
}

// ---------------------------------------------------------------------------
// forward map

namespace detail {

inline double n_choose_k(int m, int n) {
  double c = 1.0;
  for (int i = 0; i < n; ++i) c *= static_cast<double>(m - i) / (i + 1);
  return c;
}

// Joint (state, attack) feasibility polytope of one mode over a state piece.
inline HPolytope lift_with_attacks(const SwitchedSystem& sys, int mode_index,
                                   const HPolytope& S) {
  const ParamPolytope& A = sys.attacks.at(static_cast<std::size_t>(mode_index));
  const int nz = sys.nz();
  const int na = A.na();
  if (S.dim() != nz) throw DimensionMismatch("forward image: state dimension");
  Matrix GL(S.rows() + A.rows(), nz + na);
  Vector gL(S.rows() + A.rows());
  GL.setZero();
  GL.topLeftCorner(S.rows(), nz) = S.G();
  gL.head(S.rows()) = S.g();
  if (A.rows() > 0) {
    GL.bottomLeftCorner(A.rows(), nz) = -A.Hz();
    GL.bottomRightCorner(A.rows(), na) = A.Ga();
    gL.tail(A.rows()) = A.h0();
  }
  return HPolytope(std::move(GL), std::move(gL));
}

// Support function of the one-step image in direction q, via two programs and
// no vertex enumeration.  The lifted set must be nonempty.
inline double image_support(const SwitchedSystem& sys, int mode_index,
                            const HPolytope& lifted, const Vector& q) {
  const Mode& m = sys.modes.at(static_cast<std::size_t>(mode_index));
  Vector obj(lifted.dim());
  obj.head(m.A.cols()) = m.A.transpose() * q;
  obj.tail(lifted.dim() - m.A.cols()) = m.B.transpose() * q;
  auto lp = lp_solve(obj, lifted.G(), lifted.g());
  if (lp.status == LpStatus::Infeasible) throw EmptySetError("image support: empty set");
  if (lp.status == LpStatus::Unbounded)
    throw UnboundedError("image support: unbounded attack freedom");
  return lp.value + support(sys.H, Vector(m.E.transpose() * q));
}

// Deterministic direction template used when exact hulls would be too large.
inline std::vector<Vector> template_directions(const SwitchedSystem& sys) {
  const int nz = sys.nz();
  std::vector<Vector> dirs;
  for (int i = 0; i < nz; ++i) {
    Vector e = Vector::Zero(nz);
    e[i] = 1.0;
    dirs.push_back(e);
    dirs.push_back(Vector(-e));
  }
  for (int i = 0; i < sys.Z.rows(); ++i) dirs.push_back(sys.Z.G().row(i).transpose());
  Rng rng(0x7e3u);
  for (int i = 0; i < 48; ++i) dirs.push_back(rng.unit_vector(nz));
  return dirs;
}

}  // namespace detail

// One-step image of a convex piece through a mode: every admissible attack
// and disturbance applied to every member.  States with no admissible attack
// contribute nothing (that mode cannot be traversed from them).  When the
// exact vertex hull would be combinatorially too large the image falls back
// to a fixed direction template; the fallback only ever grows the set, and
// `outer` (when given) reports that it fired.
inline HPolytope phi_forward(const SwitchedSystem& sys, int mode_index,
                             const HPolytope& S, bool* outer = nullptr) {
  const Mode& m = sys.modes.at(static_cast<std::size_t>(mode_index));
  const int nz = sys.nz();
  auto lifted = detail::lift_with_attacks(sys, mode_index, S);
  if (is_empty(lifted)) return HPolytope::empty(nz);

  auto outer_image = [&]() {
    auto dirs = detail::template_directions(sys);
    Matrix G(static_cast<Eigen::Index>(dirs.size()), nz);
    Vector g(static_cast<Eigen::Index>(dirs.size()));
    for (std::size_t i = 0; i < dirs.size(); ++i) {
      G.row(static_cast<Eigen::Index>(i)) = dirs[i].transpose();
      g[static_cast<Eigen::Index>(i)] = detail::image_support(sys, mode_index, lifted, dirs[i]);
    }
    if (outer) *outer = true;
    return HPolytope(std::move(G), std::move(g));
  };

  if (detail::n_choose_k(lifted.rows(), lifted.dim()) > 5e4) return outer_image();
  auto lv = vertices(lifted);
  auto hv = vertices(sys.H);
  if (static_cast<double>(lv.size()) * static_cast<double>(hv.size()) > 20000.0)
    return outer_image();
  Matrix T(nz, lifted.dim());
  T.leftCols(nz) = m.A;
  T.rightCols(lifted.dim() - nz) = m.B;
  std::vector<Vector> pts;
  pts.reserve(lv.size() * hv.size());
  for (const auto& v : lv)
    for (const auto& h : hv) pts.push_back(T * v + m.E * h);
  pts = detail::dedupe_points(pts, 1e-9);
  if (detail::n_choose_k(static_cast<int>(pts.size()), nz) > 5e4) return outer_image();
  return hull(pts);
}

inline PolyUnion phi_forward(const SwitchedSystem& sys, int mode_index,
                             const PolyUnion& S, bool* outer = nullptr) {
  PolyUnion out{sys.nz(), {}};
  for (const auto& piece : S.pieces) {
    auto img = phi_forward(sys, mode_index, piece, outer);
    if (!is_empty(img)) out.pieces.push_back(std::move(img));
  }
  return union_prune(out);
}

// Exact certificate that the one-step image of S through a mode lands inside
// a convex target, checked row by row on support values (no enumeration).
inline bool forward_invariant(const SwitchedSystem& sys, int mode_index,
                              const HPolytope& S, const HPolytope& target,
                              double tol = 1e-8) {
  auto lifted = detail::lift_with_attacks(sys, mode_index, S);
  if (is_empty(lifted)) return true;  // the mode is not traversable from S
  for (int j = 0; j < target.rows(); ++j) {
    const Vector q = target.G().row(j).transpose();
    if (detail::image_support(sys, mode_index, lifted, q) > target.g()[j] + tol)
      return false;
  }
  return true;
}

struct InvarianceCheck {
  bool holds = false;
  bool exact = false;
};

// Certificate that the one-step image of a piece lands in a target union.
// Tries exact convex paths first; for genuinely split targets it falls back
// to a deterministic sampled check over admissible corners.
inline InvarianceCheck check_edge_invariance(const SwitchedSystem& sys, int mode_index,
                                             const HPolytope& piece,
                                             const PolyUnion& target,
                                             const Tolerances& tol = {},
                                             int samples = 200) {
  InvarianceCheck out;
  auto lifted = detail::lift_with_attacks(sys, mode_index, piece);
  if (is_empty(lifted)) {
    out.holds = true;
    out.exact = true;
    return out;
  }
  for (const auto& t : target.pieces) {
    bool inside = true;
    for (int j = 0; j < t.rows() && inside; ++j) {
      const Vector q = t.G().row(j).transpose();
      inside = detail::image_support(sys, mode_index, lifted, q) <= t.g()[j] + tol.eps_set;
    }
    if (inside) {
      out.holds = true;
      out.exact = true;
      return out;
    }
  }
  // sampled fallback: admissible corners from sampled states must land inside
  const Mode& m = sys.modes.at(static_cast<std::size_t>(mode_index));
  Rng rng = Rng(tol.rng_seed).derive(0xedce5u);
  auto hv = vertices(sys.H);
  int tried = 0;
  for (int k = 0; k < samples * 4 && tried < samples; ++k) {
    Vector z = sample_point(piece, rng);
    auto Az = eval_at(sys.attacks[mode_index], z);
    if (is_empty(Az)) continue;
    std::vector<Vector> avs;
    if (sys.attacks[mode_index].na() == 0)
      avs.push_back(Vector::Zero(0));
    else
      avs = vertices(Az);
    for (const auto& a : avs)
      for (const auto& h : hv) {
        Vector succ = m.A * z + m.B * a + m.E * h;
        if (!union_contains_point(target, succ, tol.eps_set)) return out;
      }
    ++tried;
  }
  out.holds = true;
  out.exact = false;
  return out;
}

// ---------------------------------------------------------------------------
// backward map

// Memoizes robustified rows per (mode, objective direction).
struct RobustCache {
  std::unordered_map<std::string, RobustifiedRow> rows;

  static std::string key(int mode_index, const Vector& q) {
    std::string k = std::to_string(mode_index);
    for (int i = 0; i < q.size(); ++i) {
      k.push_back(':');
      k += std::to_string(static_cast<long long>(std::llround(q[i] * 1e9)));
    }
    return k;
  }
};

struct PsiReport {
  bool exact = true;
  std::vector<std::string> notes;
};

namespace detail {

inline void note_once(std::vector<std::string>& notes, const std::string& msg) {
  for (const auto& n : notes)
    if (n == msg) return;
  notes.push_back(msg);
}

inline HPolytope with_row(const HPolytope& P, const Vector& c, double rhs) {
  Matrix G(P.rows() + 1, P.dim());
  Vector g(P.rows() + 1);
  G.topRows(P.rows()) = P.G();
  g.head(P.rows()) = P.g();
  G.bottomRows(1) = c.transpose();
  g[P.rows()] = rhs;
  return HPolytope(std::move(G), std::move(g));
}

inline void keep_largest(std::vector<HPolytope>& pieces, std::size_t cap) {
  if (pieces.size() <= cap) return;
  std::vector<std::pair<double, std::size_t>> ranked;
  for (std::size_t i = 0; i < pieces.size(); ++i)
    ranked.emplace_back(-chebyshev_center(pieces[i]).second, i);
  std::stable_sort(ranked.begin(), ranked.end());
  std::vector<HPolytope> kept;
  for (std::size_t i = 0; i < cap; ++i) kept.push_back(pieces[ranked[i].second]);
  pieces = std::move(kept);
}

inline const RobustifiedRow& cached_robustify(const SwitchedSystem& sys,
                                              int mode_index, const Vector& q,
                                              RobustCache& cache) {
  const std::string key = RobustCache::key(mode_index, q);
  auto it = cache.rows.find(key);
  if (it == cache.rows.end())
    it = cache.rows.emplace(key, robustify(q, sys.attacks[mode_index], &sys.Z)).first;
  return it->second;
}

}  // namespace detail

// States where the mode admits no stealthy attack at all; from them this mode
// is simply not traversable, so they trivially survive it.
inline PolyUnion mode_vacuity(const SwitchedSystem& sys, int mode_index,
                              RobustCache* cache = nullptr) {
  const ParamPolytope& A = sys.attacks.at(static_cast<std::size_t>(mode_index));
  PolyUnion out{sys.nz(), {}};
  if (A.na() == 0) return out;
  RobustCache local;
  RobustCache& c = cache ? *cache : local;
  const auto& row = detail::cached_robustify(sys, mode_index, Vector::Zero(A.na()), c);
  for (const auto& r : row.rays) {
    auto piece = detail::with_row(sys.Z, r.c, -r.d - 1e-12);
    if (!is_empty(piece)) out.pieces.push_back(remove_redundancy(piece));
  }
  return union_prune(out);
}

// Robust predecessors of a target union through one mode: the states whose
// every admissible attack and disturbance lead into the target, plus the
// states where the mode admits no attack at all.  Always a subset of Z; any
// fallback shrinks the result, never grows it.
inline PolyUnion psi_backward(const SwitchedSystem& sys, int mode_index,
                              const PolyUnion& S, const Tolerances& tol = {},
                              RobustCache* cache = nullptr,
                              PsiReport* report = nullptr) {
  const Mode& m = sys.modes.at(static_cast<std::size_t>(mode_index));
  const ParamPolytope& A = sys.attacks.at(static_cast<std::size_t>(mode_index));
  const int nz = sys.nz();
  const int na = A.na();
  RobustCache local;
  RobustCache& c = cache ? *cache : local;
  PsiReport rep;

  PolyUnion out = mode_vacuity(sys, mode_index, &c);
  if (S.pieces.size() > 1) {
    rep.exact = false;
    detail::note_once(rep.notes, "piecewise target: predecessors taken piecewise (inner)");
  }

  const std::size_t branch_cap = static_cast<std::size_t>(std::max(64, tol.max_union));
  for (const auto& piece : S.pieces) {
    std::vector<HPolytope> partials{sys.Z};
    for (int j = 0; j < piece.rows() && !partials.empty(); ++j) {
      const Vector gj = piece.G().row(j).transpose();
      const double dist = support(sys.H, Vector(m.E.transpose() * gj));
      const double rhs0 = piece.g()[j] - dist;
      std::vector<std::pair<Vector, double>> options;
      if (na == 0) {
        options.emplace_back(Vector(m.A.transpose() * gj), rhs0);
      } else {
        const Vector q = m.B.transpose() * gj;
        const auto& row = detail::cached_robustify(sys, mode_index, q, c);
        for (const auto& f : row.forms)
          options.emplace_back(Vector(m.A.transpose() * gj + f.c), rhs0 - f.d);
      }
      std::vector<HPolytope> next;
      for (const auto& part : partials) {
        if (options.size() > 1) {
          // a choice already satisfied on the whole piece absorbs the row:
          // the union over choices collapses to the piece itself
          bool absorbed = false;
          for (const auto& [cvec, rhs] : options)
            if (support(part, cvec) <= rhs + tol.eps_feas) {
              absorbed = true;
              break;
            }
          if (absorbed) {
            next.push_back(part);
            continue;
          }
        }
        if (options.size() == 1) {
          auto h = detail::with_row(part, options[0].first, options[0].second);
          if (!is_empty(h)) next.push_back(std::move(h));
          continue;
        }
        // split on which choice binds: the cells partition the piece, and on
        // each cell the worst case reduces to a single affine row, so rows
        // sharing binding structure stop multiplying pieces
        for (std::size_t k = 0; k < options.size(); ++k) {
          HPolytope cell = detail::with_row(part, options[k].first, options[k].second);
          for (std::size_t l = 0; l < options.size() && !is_empty(cell); ++l) {
            if (l == k) continue;
            cell = detail::with_row(cell, Vector(options[k].first - options[l].first),
                                    options[k].second - options[l].second);
          }
          if (!is_empty(cell)) next.push_back(std::move(cell));
        }
      }
      if (next.size() > branch_cap) {
        detail::keep_largest(next, branch_cap);
        rep.exact = false;
        detail::note_once(rep.notes, "worst-case choice branching truncated (inner)");
      }
      partials = std::move(next);
    }
    for (auto& part : partials) out.pieces.push_back(remove_redundancy(part));
  }

  out = union_prune(out);
  if (out.pieces.size() > static_cast<std::size_t>(tol.max_union)) {
    detail::keep_largest(out.pieces, static_cast<std::size_t>(tol.max_union));
    rep.exact = false;
    detail::note_once(rep.notes, "predecessor union truncated to the piece cap (inner)");
    out = union_prune(out);
  }
  if (report) {
    report->exact = report->exact && rep.exact;
    for (const auto& n : rep.notes) detail::note_once(report->notes, n);
  }
  return out;
}

// ---------------------------------------------------------------------------
// fixed-point recursion over the switching graph

enum class ReachStatus { Converged, IterationCapReached, Empty };

struct ReachResult {
  ReachStatus status = ReachStatus::IterationCapReached;
  int iterations = 0;
  std::vector<PolyUnion> per_node;  // safe states per current graph node
  PolyUnion safe_set{0, {}};        // safe regardless of the attack phase
  bool exact = true;
  std::vector<std::string> notes;
};

inline PolyUnion intersect_unions(const PolyUnion& A, const PolyUnion& B) {
  if (A.dim != B.dim) throw DimensionMismatch("union intersection: dimension");
  PolyUnion out{A.dim, {}};
  for (const auto& a : A.pieces)
    for (const auto& b : B.pieces) {
      auto c = intersect(a, b);
      if (!is_empty(c)) out.pieces.push_back(remove_redundancy(c));
    }
  return union_prune(out);
}

inline ReachResult backward_sequence(const SwitchedSystem& sys,
                                     const Tolerances& tol = {}, int l_max = 200,
                                     std::vector<std::vector<PolyUnion>>* trace = nullptr) {
  const int nz = sys.nz();
  const std::size_t N = sys.graph.nodes.size();
  ReachResult res;
  res.per_node.assign(N, PolyUnion{nz, {sys.Z}});
  res.safe_set = PolyUnion{nz, {}};
  if (trace) trace->push_back(res.per_node);
  RobustCache cache;
  PsiReport rep;

  std::vector<std::vector<std::pair<int, int>>> out_edges(N);  // (dst, mode)
  for (const auto& e : sys.graph.edges)
    out_edges[sys.node_index(e.src)].emplace_back(sys.node_index(e.dst),
                                                  sys.mode_index(e.label));

  for (int k = 1; k <= l_max; ++k) {
    std::vector<PolyUnion> next(N, PolyUnion{nz, {}});
    bool any_empty = false;
    for (std::size_t i = 0; i < N; ++i) {
      // anchor at the node's current set so iterates stay nested even when a
      // truncation drops pieces; without truncation the limit is unchanged
      PolyUnion acc = res.per_node[i];
      for (const auto& [dst, mode] : out_edges[i]) {
        auto pre = psi_backward(sys, mode, res.per_node[dst], tol, &cache, &rep);
        acc = intersect_unions(acc, pre);
        if (acc.pieces.size() > static_cast<std::size_t>(tol.max_union)) {
          detail::keep_largest(acc.pieces, static_cast<std::size_t>(tol.max_union));
          rep.exact = false;
          detail::note_once(rep.notes, "per-node union truncated to the piece cap (inner)");
        }
        if (acc.pieces.empty()) break;
      }
      next[i] = std::move(acc);
      if (next[i].pieces.empty()) any_empty = true;
    }
    if (trace) trace->push_back(next);
    if (any_empty) {
      res.per_node = std::move(next);
      res.status = ReachStatus::Empty;
      res.iterations = k;
      res.exact = res.exact && rep.exact;
      res.notes = rep.notes;
      return res;
    }
    bool converged = true;
    for (std::size_t i = 0; i < N && converged; ++i) {
      auto eq = multiset_equal(next[i], res.per_node[i], tol);
      if (eq.equal && !eq.exact)
        detail::note_once(rep.notes, "fixed-point equality checked statistically");
      converged = eq.equal;
    }
    res.per_node = std::move(next);
    if (converged) {
      res.status = ReachStatus::Converged;
      res.iterations = k;
      PolyUnion safe = res.per_node[0];
      for (std::size_t i = 1; i < N; ++i) safe = intersect_unions(safe, res.per_node[i]);
      res.safe_set = union_prune(safe);
      res.exact = rep.exact;
      res.notes = rep.notes;
      return res;
    }
  }
  res.status = ReachStatus::IterationCapReached;
  res.iterations = l_max;
  res.exact = false;
  detail::note_once(rep.notes,
                    "iteration cap reached before a fixed point; the sets may not be invariant");
  PolyUnion safe = res.per_node[0];
  for (std::size_t i = 1; i < N; ++i) safe = intersect_unions(safe, res.per_node[i]);
  res.safe_set = union_prune(safe);
  res.notes = rep.notes;
  return res;
}

// ---------------------------------------------------------------------------
// forward recursion (diagnostic; any fallback only grows the sets)

struct ForwardResult {
  std::vector<std::vector<PolyUnion>> steps;  // steps[k][node]
  bool over_approx = false;
  std::vector<std::string> notes;
};

inline ForwardResult forward_sequence(const SwitchedSystem& sys, const Vector& z0,
                                      int steps, const Tolerances& tol = {}) {
  const int nz = sys.nz();
  if (z0.size() != nz) throw DimensionMismatch("forward recursion: initial state");
  if (!contains_point(sys.Z, z0, 1e-9))
    throw InitialStateOutsideZ("initial state violates the constraint set");
  const std::size_t N = sys.graph.nodes.size();
  ForwardResult res;

  std::vector<PolyUnion> cur(N, PolyUnion{nz, {}});
  cur[0] = PolyUnion{nz, {HPolytope::box(z0, z0)}};  // all-quiet start node
  res.steps.push_back(cur);

  for (int k = 0; k < steps; ++k) {
    std::vector<PolyUnion> next(N, PolyUnion{nz, {}});
    for (const auto& e : sys.graph.edges) {
      const int i = sys.node_index(e.src);
      const int d = sys.node_index(e.dst);
      const int mode = sys.mode_index(e.label);
      for (const auto& piece : cur[i].pieces) {
        auto img = phi_forward(sys, mode, piece);
        if (!is_empty(img)) next[d].pieces.push_back(std::move(img));
      }
    }
    for (auto& u : next) {
      u = union_prune(u);
      if (u.pieces.size() > static_cast<std::size_t>(tol.max_union)) {
        auto dirs = detail::template_directions(sys);
        Matrix G(static_cast<Eigen::Index>(dirs.size()), nz);
        Vector g(static_cast<Eigen::Index>(dirs.size()));
        for (std::size_t i = 0; i < dirs.size(); ++i) {
          double h = -1e300;
          for (const auto& piece : u.pieces) h = std::max(h, support(piece, dirs[i]));
          G.row(static_cast<Eigen::Index>(i)) = dirs[i].transpose();
          g[static_cast<Eigen::Index>(i)] = h;
        }
        u = PolyUnion{nz, {HPolytope(std::move(G), std::move(g))}};
        res.over_approx = true;
        detail::note_once(res.notes, "forward union merged over a direction template (outer)");
      }
    }
    cur = std::move(next);
    res.steps.push_back(cur);
  }
  return res;
}

}  // namespace polyreach
