#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "polyreach/lp.hpp"
#include "polyreach/reach.hpp"

namespace polyreach {

// How the attacker picks a signal inside its admissible set each step.
enum class AttackPolicy { Zero, Random, Extreme };
// How the disturbance realization is drawn from its bounding set each step.
enum class NoisePolicy { Zero, Random, Vertex };

struct SimOptions {
  AttackPolicy attack = AttackPolicy::Extreme;
  NoisePolicy noise = NoisePolicy::Vertex;
  int steps = 50;
  std::uint64_t seed = 1;
  int start_node = 0;  // graph node the pattern automaton starts in
  // Take an attacked edge whenever one is playable; otherwise walk randomly.
  bool prefer_attack_edges = true;
};

// One closed-loop run.  `z` has steps+1 entries; the per-step vectors have
// `steps` entries and describe the transition from z[k] to z[k+1].
struct Trajectory {
  std::vector<Vector> z;
  std::vector<int> nodes;  // graph node occupied before each step (steps+1)
  std::vector<int> modes;  // 0-based mode driving step k
  std::vector<Vector> attacks;
  std::vector<Vector> noises;
  std::vector<Vector> residuals;
  std::vector<bool> alarms;
  std::vector<bool> attacked;  // step k ran under a mode with attack channels
  std::vector<bool> forced;    // admissible set was empty: a = 0 was injected
  int first_exit = -1;  // first state index violating the constraint set
};

namespace detail {

// (destination node, mode index) per source node.
inline std::vector<std::vector<std::pair<int, int>>> edge_table(const SwitchedSystem& sys) {
  std::vector<std::vector<std::pair<int, int>>> out(sys.graph.nodes.size());
  for (const auto& e : sys.graph.edges)
    out[sys.node_index(e.src)].emplace_back(sys.node_index(e.dst), sys.mode_index(e.label));
  return out;
}

// Disturbance extreme points (a single zero vector when there is none).
inline std::vector<Vector> noise_vertices(const SwitchedSystem& sys) {
  if (sys.H.dim() == 0) return {Vector(0)};
  auto v = vertices(sys.H);
  if (v.empty()) throw EmptySetError("rollout: disturbance set is empty");
  return v;
}

inline Vector residual_of(const Mode& m, const Vector& z, const Vector& a, const Vector& eta) {
  return m.C * z + m.D * a + m.F * eta;
}

}  // namespace detail

// Simulates the switched loop from z0.  Edges whose admissible attack set is
// empty at the current state are avoided while any playable move exists; when
// the automaton leaves no playable move, the edge is taken with a zero attack
// and the step is tagged `forced` (the detector may then fire).
inline Trajectory rollout(const SwitchedSystem& sys, const Detector& det, const Vector& z0,
                          const SimOptions& opt) {
  if (z0.size() != sys.nz()) throw DimensionMismatch("rollout: initial state dimension");
  if (!contains_point(sys.Z, z0, 1e-9))
    throw InitialStateOutsideZ("rollout: initial state violates the constraint set");
  if (opt.steps < 0) throw Error("rollout: negative step count");
  if (opt.start_node < 0 || opt.start_node >= static_cast<int>(sys.graph.nodes.size()))
    throw IndexOutOfRange("rollout: start node");

  const auto edges = detail::edge_table(sys);
  const auto eta_verts = detail::noise_vertices(sys);
  Rng edge_rng = Rng(opt.seed).derive(1);
  Rng attack_rng = Rng(opt.seed).derive(2);
  Rng noise_rng = Rng(opt.seed).derive(3);

  Trajectory tr;
  tr.z.push_back(z0);
  tr.nodes.push_back(opt.start_node);

  for (int k = 0; k < opt.steps; ++k) {
    const Vector& z = tr.z.back();
    const int node = tr.nodes.back();

    // Collect the playable moves; keep the admissible attack set alongside.
    std::vector<std::pair<std::pair<int, int>, HPolytope>> playable;
    std::vector<int> with_attack;
    for (const auto& mv : edges[node]) {
      HPolytope Az = eval_at(sys.attacks[static_cast<std::size_t>(mv.second)], z);
      if (sys.attacks[static_cast<std::size_t>(mv.second)].na() > 0 && is_empty(Az)) continue;
      if (sys.attacks[static_cast<std::size_t>(mv.second)].na() > 0)
        with_attack.push_back(static_cast<int>(playable.size()));
      playable.emplace_back(mv, std::move(Az));
    }

    bool forced = false;
    int dst, mode;
    Vector a;
    if (playable.empty()) {
      // Stealthy play is impossible from here; inject nothing and move on.
      forced = true;
      const auto& mv =
          edges[node][static_cast<std::size_t>(edge_rng.pick(static_cast<int>(edges[node].size())))];
      dst = mv.first;
      mode = mv.second;
      a = Vector::Zero(sys.attacks[static_cast<std::size_t>(mode)].na());
    } else {
      int choice;
      if (opt.prefer_attack_edges && !with_attack.empty())
        choice =
            with_attack[static_cast<std::size_t>(edge_rng.pick(static_cast<int>(with_attack.size())))];
      else
        choice = edge_rng.pick(static_cast<int>(playable.size()));
      dst = playable[static_cast<std::size_t>(choice)].first.first;
      mode = playable[static_cast<std::size_t>(choice)].first.second;
      const HPolytope& Az = playable[static_cast<std::size_t>(choice)].second;
      const int na = sys.attacks[static_cast<std::size_t>(mode)].na();

      a = Vector::Zero(na);
      if (na > 0) {
        switch (opt.attack) {
          case AttackPolicy::Zero: {
            if (!contains_point(Az, a, 1e-12)) a = chebyshev_center(Az).first;
            break;
          }
          case AttackPolicy::Random:
            a = sample_point(Az, attack_rng);
            break;
          case AttackPolicy::Extreme: {
            // extreme point maximizing a random direction
            Vector d = attack_rng.unit_vector(na);
            auto lr = lp_solve(d, Az.G(), Az.g(), LpSense::Max);
            if (lr.status == LpStatus::Optimal)
              a = lr.x;
            else
              a = chebyshev_center(Az).first;
            break;
          }
        }
      }
    }

    const Mode& m = sys.modes[static_cast<std::size_t>(mode)];
    Vector eta;
    if (sys.H.dim() == 0) {
      eta = Vector(0);
    } else {
      switch (opt.noise) {
        case NoisePolicy::Zero:
          eta = Vector::Zero(sys.H.dim());
          break;
        case NoisePolicy::Random:
          eta = sample_point(sys.H, noise_rng);
          break;
        case NoisePolicy::Vertex:
          eta = eta_verts[static_cast<std::size_t>(noise_rng.pick(static_cast<int>(eta_verts.size())))];
          break;
      }
    }

    Vector r = detail::residual_of(m, z, a, eta);
    Vector znext = m.A * z + m.B * a + m.E * eta;

    tr.modes.push_back(mode);
    tr.attacks.push_back(std::move(a));
    tr.noises.push_back(std::move(eta));
    tr.alarms.push_back(residual_alarm(det, r));
    tr.residuals.push_back(std::move(r));
    tr.attacked.push_back(sys.attacks[static_cast<std::size_t>(mode)].na() > 0);
    tr.forced.push_back(forced);
    tr.nodes.push_back(dst);
    if (tr.first_exit < 0 && !contains_point(sys.Z, znext, 1e-9))
      tr.first_exit = static_cast<int>(tr.z.size());
    tr.z.push_back(std::move(znext));
  }
  return tr;
}

// Greedy one-step-lookahead adversary: from z0 at `start_node` it plays, each
// step, the (edge, attack vertex, disturbance vertex) triple whose successor
// most violates the state constraints, and stops as soon as one does.  All
// play stays admissible: attacks come from the state-dependent admissible set
// and edges whose set is empty are skipped.
inline Trajectory adversarial_escape(const SwitchedSystem& sys, const Detector& det,
                                     const Vector& z0, int start_node, int steps) {
  if (z0.size() != sys.nz()) throw DimensionMismatch("adversarial_escape: state dimension");
  const auto edges = detail::edge_table(sys);
  const auto eta_verts = detail::noise_vertices(sys);
  const Matrix& Gz = sys.Z.G();
  const Vector& gz = sys.Z.g();

  Trajectory tr;
  tr.z.push_back(z0);
  tr.nodes.push_back(start_node);

  for (int k = 0; k < steps; ++k) {
    const Vector& z = tr.z.back();
    const int node = tr.nodes.back();

    double best = -std::numeric_limits<double>::infinity();
    int best_dst = -1, best_mode = -1;
    Vector best_a, best_eta, best_znext;

    for (const auto& [dst, mode] : edges[node]) {
      const Mode& m = sys.modes[static_cast<std::size_t>(mode)];
      const int na = sys.attacks[static_cast<std::size_t>(mode)].na();
      std::vector<Vector> a_cands;
      if (na == 0) {
        a_cands.push_back(Vector(0));
      } else {
        HPolytope Az = eval_at(sys.attacks[static_cast<std::size_t>(mode)], z);
        if (is_empty(Az)) continue;  // attacking here would break stealthiness
        a_cands = vertices(Az);
        if (a_cands.empty()) a_cands.push_back(chebyshev_center(Az).first);
      }
      const Vector base = m.A * z;
      for (const auto& a : a_cands) {
        const Vector with_a = base + m.B * a;
        for (const auto& eta : eta_verts) {
          Vector znext = with_a + m.E * eta;
          const double score = Gz.rows() > 0 ? (Gz * znext - gz).maxCoeff() : -1.0;
          if (score > best) {
            best = score;
            best_dst = dst;
            best_mode = mode;
            best_a = a;
            best_eta = eta;
            best_znext = std::move(znext);
          }
        }
      }
    }
    if (best_mode < 0) break;  // no admissible move: the adversary is stuck

    const Mode& m = sys.modes[static_cast<std::size_t>(best_mode)];
    Vector r = detail::residual_of(m, z, best_a, best_eta);
    tr.modes.push_back(best_mode);
    tr.attacks.push_back(std::move(best_a));
    tr.noises.push_back(std::move(best_eta));
    tr.alarms.push_back(residual_alarm(det, r));
    tr.residuals.push_back(std::move(r));
    tr.attacked.push_back(sys.attacks[static_cast<std::size_t>(best_mode)].na() > 0);
    tr.forced.push_back(false);
    tr.nodes.push_back(best_dst);
    tr.z.push_back(std::move(best_znext));
    if (best > 1e-9) {
      tr.first_exit = static_cast<int>(tr.z.size()) - 1;
      break;
    }
  }
  return tr;
}

struct Falsification {
  bool found = false;
  Trajectory witness;  // meaningful only when found
  int trials = 0;
  // Informative only: starts sampled just outside the claimed region that the
  // adversary drove out of the constraint set.
  int outside_trials = 0;
  int outside_escapes = 0;
};

// Tries to refute a claimed safe region.  Start states are drawn on the
// boundary shell of its pieces (a random ray from the incenter, stopped just
// inside the boundary); the greedy adversary then plays from every graph node,
// since a state is only safe if it survives regardless of where in the
// switching pattern the system currently is.  A run from inside that leaves
// the constraint set is a counterexample.  Points just outside the shell are
// probed too, as a tightness indication only.
inline Falsification falsify(const SwitchedSystem& sys, const Detector& det,
                             const PolyUnion& safe, int trials, int steps, std::uint64_t seed) {
  Falsification out;
  if (safe.pieces.empty()) return out;
  Rng rng(seed);
  const int nodes = static_cast<int>(sys.graph.nodes.size());
  for (int t = 0; t < trials; ++t) {
    ++out.trials;
    const auto& piece =
        safe.pieces[static_cast<std::size_t>(rng.pick(static_cast<int>(safe.pieces.size())))];
    if (piece.explicitly_empty() || is_empty(piece)) continue;

    auto [center, radius] = chebyshev_center(piece);
    if (radius < 0.0) continue;
    const Vector d = rng.unit_vector(piece.dim());
    double tmax = std::numeric_limits<double>::infinity();
    for (int j = 0; j < piece.rows(); ++j) {
      const double denom = piece.G().row(j).dot(d);
      if (denom > 1e-12) tmax = std::min(tmax, (piece.g()[j] - piece.G().row(j).dot(center)) / denom);
    }
    if (!std::isfinite(tmax) || tmax < 0.0) continue;

    Vector z_in = center + 0.97 * tmax * d;
    if (contains_point(sys.Z, z_in, 1e-9)) {
      for (int node = 0; node < nodes; ++node) {
        auto tr = adversarial_escape(sys, det, z_in, node, steps);
        if (tr.first_exit >= 0) {
          out.found = true;
          out.witness = std::move(tr);
          return out;
        }
      }
    }

    Vector z_out = center + 1.03 * tmax * d;
    if (!union_contains_point(safe, z_out, 1e-9) && contains_point(sys.Z, z_out, 1e-9)) {
      ++out.outside_trials;
      for (int node = 0; node < nodes; ++node) {
        if (adversarial_escape(sys, det, z_out, node, steps).first_exit >= 0) {
          ++out.outside_escapes;
          break;
        }
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Brute-force grid oracle
// ---------------------------------------------------------------------------

struct GridCell {
  Vector z;
  int first_violation = -1;  // step index of the found violation, -1 if none
};

struct GridReport {
  std::vector<GridCell> cells;
  int per_axis = 0;
  int horizon = 0;
  long long budget = 0;  // search-node budget spent per start point
  int violating = 0;     // cells with a witnessed violation
};

// Independent desk-scale check of reachability results: a per-axis grid over
// the constraint set is classified by a best-first depth-first search over
// admissible play (graph edges, extreme points of the state-dependent attack
// sets, disturbance vertices), bounded by `budget` expansions per point.  A
// cell is marked violating only with a concrete admissible run leaving the
// constraint set, so the "never violates" region may be optimistic but a
// violation flag is always genuine.  The search starts from every graph node
// (unknown attack phase).  Deliberately built on the raw one-step map only —
// none of the set-valued reachability machinery is involved.
inline GridReport grid_oracle(const SwitchedSystem& sys, int per_axis = 9, int horizon = 30,
                              long long budget_per_point = 1500) {
  if (per_axis < 2) throw Error("grid_oracle: need at least two points per axis");
  const int n = sys.Z.dim();
  auto [lo, hi] = bounding_box(sys.Z);
  const auto edges = detail::edge_table(sys);
  const auto eta_verts = detail::noise_vertices(sys);
  const Matrix& Gz = sys.Z.G();
  const Vector& gz = sys.Z.g();

  GridReport rep;
  rep.per_axis = per_axis;
  rep.horizon = horizon;
  rep.budget = budget_per_point;

  // All grid points of the bounding box that lie in the constraint set.
  std::vector<int> idx(static_cast<std::size_t>(n), 0);
  std::vector<Vector> points;
  for (;;) {
    Vector z(n);
    for (int i = 0; i < n; ++i)
      z[i] = lo[i] + (hi[i] - lo[i]) * static_cast<double>(idx[static_cast<std::size_t>(i)]) /
                         static_cast<double>(per_axis - 1);
    if (contains_point(sys.Z, z, 1e-9)) points.push_back(std::move(z));
    int c = 0;
    while (c < n && ++idx[static_cast<std::size_t>(c)] == per_axis) idx[static_cast<std::size_t>(c++)] = 0;
    if (c == n) break;
  }

  struct Node {
    Vector z;
    int node;
    int depth;
  };

  for (auto& z0 : points) {
    GridCell cell;
    cell.z = z0;
    long long budget = budget_per_point;
    std::vector<Node> stack;
    for (int s = 0; s < static_cast<int>(sys.graph.nodes.size()); ++s)
      stack.push_back({z0, s, 0});

    while (!stack.empty() && budget > 0 && cell.first_violation < 0) {
      Node cur = std::move(stack.back());
      stack.pop_back();
      --budget;
      if (cur.depth >= horizon) continue;

      // Expand; queue children so the most constraint-violating pops first.
      std::vector<std::pair<double, Node>> children;
      for (const auto& [dst, mode] : edges[static_cast<std::size_t>(cur.node)]) {
        const Mode& m = sys.modes[static_cast<std::size_t>(mode)];
        const int na = sys.attacks[static_cast<std::size_t>(mode)].na();
        std::vector<Vector> a_cands;
        if (na == 0) {
          a_cands.push_back(Vector(0));
        } else {
          HPolytope Az = eval_at(sys.attacks[static_cast<std::size_t>(mode)], cur.z);
          if (is_empty(Az)) continue;
          a_cands = vertices(Az);
          if (a_cands.empty()) a_cands.push_back(chebyshev_center(Az).first);
        }
        const Vector base = m.A * cur.z;
        for (const auto& a : a_cands) {
          const Vector with_a = base + m.B * a;
          for (const auto& eta : eta_verts) {
            Vector znext = with_a + m.E * eta;
            const double score = (Gz * znext - gz).maxCoeff();
            if (score > 1e-9) {
              cell.first_violation = cur.depth + 1;
              break;
            }
            children.push_back({score, Node{std::move(znext), dst, cur.depth + 1}});
          }
          if (cell.first_violation >= 0) break;
        }
        if (cell.first_violation >= 0) break;
      }
      if (cell.first_violation >= 0) break;
      std::sort(children.begin(), children.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
      for (auto& [score, child] : children) stack.push_back(std::move(child));
    }

    if (cell.first_violation >= 0) ++rep.violating;
    rep.cells.push_back(std::move(cell));
  }
  return rep;
}

struct OracleComparison {
  int safe_cells = 0;   // grid cells strictly inside the claimed safe region
  int mismatches = 0;   // such cells with a witnessed violation: soundness bug
};

// Every grid cell strictly inside `safe` must carry no violation witness.
inline OracleComparison compare_safe_grid(const GridReport& rep, const PolyUnion& safe,
                                          double margin = 1e-7) {
  OracleComparison out;
  for (const auto& cell : rep.cells) {
    if (!union_contains_point(safe, cell.z, -margin)) continue;
    ++out.safe_cells;
    if (cell.first_violation >= 0) ++out.mismatches;
  }
  return out;
}

// coordinates, label, first-violation step (-1 when no violation was found)
inline std::string grid_csv(const GridReport& rep) {
  std::string s;
  const int n = rep.cells.empty() ? 0 : static_cast<int>(rep.cells.front().z.size());
  for (int i = 0; i < n; ++i) s += "z" + std::to_string(i + 1) + ",";
  s += "label,first_violation\n";
  char buf[64];
  for (const auto& cell : rep.cells) {
    for (int i = 0; i < n; ++i) {
      std::snprintf(buf, sizeof(buf), "%.10g,", cell.z[i]);
      s += buf;
    }
    s += cell.first_violation >= 0 ? "violates," : "never,";
    std::snprintf(buf, sizeof(buf), "%d\n", cell.first_violation);
    s += buf;
  }
  return s;
}

}  // namespace polyreach
