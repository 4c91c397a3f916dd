#pragma once

// Attack-impact metrics over safe sets.
//
// Both metrics compare the attack-free safe set S0 against the safe set S
// surviving under an attack scenario:
//   I1 — fraction of S0's volume destroyed by the attack,
//   I2 — 1 minus the largest lambda with lambda*S0 still inside S
//        (how much of the nominal operating scale survives).
// Identical sets score exactly zero; an empty survivor scores exactly one.

#include <cstdio>
#include <string>
#include <vector>

#include "polyreach/geometry.hpp"
#include "polyreach/reach.hpp"

namespace polyreach {

struct Impact {
  double I1 = 0.0;
  double I2 = 0.0;
  double vol_nominal = 0.0;
  double vol_attacked = 0.0;
  double mu = 1.0;
  std::string volume_mode = "exact";
  std::string mu_mode = "exact";
};

namespace detail {

inline double clamp_unit(double v, const char* what) {
  if (v < -0.05 || v > 1.05) throw NumericalFailure(std::string(what) + " outside [0,1]");
  return std::min(1.0, std::max(0.0, v));
}

inline double piece_volume(const HPolytope& P, const Tolerances& tol, bool& exact) {
  try {
    return volume(P);
  } catch (const EnumerationOverflow&) {
    exact = false;
    return union_volume(PolyUnion{P.dim(), {P}}, tol).value;
  }
}

}  // namespace detail

inline Impact impact(const HPolytope& S0, const PolyUnion& S, const Tolerances& tol = {}) {
  if (is_empty(S0, tol.eps_feas)) throw NominalEmpty("impact: attack-free safe set is empty");
  if (!is_cset(S0)) throw NotCSet("impact: attack-free safe set must be a c-set");
  PolyUnion Sp = union_prune(S);
  for (const auto& piece : Sp.pieces)
    if (!contains_set(S0, piece, 1e-6))
      throw NotSubset("impact: attacked safe set escapes the attack-free one");

  Impact out;
  bool vol_exact = true;
  out.vol_nominal = detail::piece_volume(S0, tol, vol_exact);

  if (Sp.pieces.empty()) {
    out.I1 = 1.0;
    out.I2 = 1.0;
    out.mu = 0.0;
    out.vol_attacked = 0.0;
    out.volume_mode = vol_exact ? "exact" : "mc";
    return out;
  }
  if (Sp.pieces.size() == 1 && contains_set(Sp.pieces[0], S0, tol.eps_set) &&
      contains_set(S0, Sp.pieces[0], tol.eps_set)) {
    out.vol_attacked = out.vol_nominal;  // identical sets: exactly no impact
    out.volume_mode = vol_exact ? "exact" : "mc";
    return out;
  }

  if (Sp.pieces.size() == 1) {
    out.vol_attacked = detail::piece_volume(Sp.pieces[0], tol, vol_exact);
  } else {
    auto ve = union_volume(Sp, tol);
    out.vol_attacked = ve.value;
    vol_exact = vol_exact && ve.exact;
  }
  out.volume_mode = vol_exact ? "exact" : "mc";
  out.I1 = detail::clamp_unit((out.vol_nominal - out.vol_attacked) / out.vol_nominal,
                              "volume impact");

  // largest surviving scale: exact per piece, then sampled growth across pieces
  double mu = 0.0;
  for (const auto& piece : Sp.pieces) {
    if (!is_cset(piece)) continue;  // cannot anchor any scaled copy of S0
    mu = std::max(mu, std::max(0.0, minkowski_distance(S0, piece)));
  }
  mu = std::min(mu, 1.0);
  if (Sp.pieces.size() > 1 && mu < 1.0) {
    auto covered = [&](double lam) {
      return union_contains_set(Sp, scale(S0, lam), tol, 2000).holds;
    };
    const double step = std::max(1e-6, 1e-3 * (1.0 - mu));
    if (covered(std::min(1.0, mu + step))) {
      double lo = mu, hi = 1.0;
      if (covered(1.0)) {
        lo = 1.0;
      } else {
        for (int it = 0; it < 30; ++it) {
          const double mid = 0.5 * (lo + hi);
          (covered(mid) ? lo : hi) = mid;
        }
      }
      if (lo > mu + 1e-9) {
        mu = lo;
        out.mu_mode = "sampled";
      }
    }
  }
  out.mu = detail::clamp_unit(mu, "scale survival");
  out.I2 = detail::clamp_unit(1.0 - out.mu, "scale impact");
  return out;
}

// ---------------------------------------------------------------------------
// sweeps over the attack-length budget

// Recovery-time rule: how many quiet steps the attacker owes after a burst of
// up to n_max attacked steps.
inline int resolve_n_min(const std::string& rule, int n_max) {
  if (rule == "n_max-1") return std::max(1, n_max - 1);
  if (rule == "n_max+1") return n_max + 1;
  std::size_t pos = 0;
  int v = 0;
  try {
    v = std::stoi(rule, &pos);
  } catch (const std::exception&) {
    throw InvalidDwell("recovery rule must be n_max-1, n_max+1, or a positive integer");
  }
  if (pos != rule.size() || v < 1)
    throw InvalidDwell("recovery rule must be n_max-1, n_max+1, or a positive integer");
  return v;
}

struct SweepSpec {
  ChannelPattern::Kind kind = ChannelPattern::Kind::Sensor;
  int index = 1;
  double bound = 0.0;
  std::vector<int> n_max_values;
  std::string n_min_rule = "1";
  int l_max = 200;
};

struct SweepRow {
  int n_max = 0;
  Impact impact;
  std::string status = "converged";
};

namespace detail {

// Attack-free baseline for a sweep; must converge to a single convex set.
inline ReachResult checked_nominal(const PlantModel& p, const Gains& gn, const HPolytope& R,
                                   double e_max, const Tolerances& tol, int l_max) {
  auto nominal = backward_sequence(assemble_system(p, gn, R, {}, e_max), tol, l_max);
  if (nominal.status == ReachStatus::Empty || nominal.safe_set.pieces.empty())
    throw NominalEmpty("sweep: attack-free safe set is empty");
  if (nominal.status != ReachStatus::Converged)
    throw Error("sweep: attack-free recursion did not converge");
  if (nominal.safe_set.pieces.size() != 1)
    throw NumericalFailure("sweep: attack-free safe set unexpectedly split");
  return nominal;
}

// One sweep row: reach under `channels` (empty = the baseline itself) and
// score it against the baseline.
inline SweepRow sweep_row(const PlantModel& p, const Gains& gn, const HPolytope& R,
                          const std::vector<AttackChannel>& channels, double e_max,
                          const Tolerances& tol, int l_max, const ReachResult& nominal,
                          int n_max, PolyUnion* attacked_out = nullptr) {
  const HPolytope& S0 = nominal.safe_set.pieces[0];
  SweepRow row;
  row.n_max = n_max;
  if (channels.empty()) {
    row.impact = impact(S0, nominal.safe_set, tol);
    row.status = "converged";
    if (attacked_out != nullptr) *attacked_out = nominal.safe_set;
    return row;
  }
  auto res = backward_sequence(assemble_system(p, gn, R, channels, e_max), tol, l_max);
  switch (res.status) {
    case ReachStatus::Converged: row.status = "converged"; break;
    case ReachStatus::IterationCapReached: row.status = "iteration_cap"; break;
    case ReachStatus::Empty: row.status = "empty"; break;
  }
  row.impact = impact(S0, res.safe_set, tol);
  if (attacked_out != nullptr) *attacked_out = std::move(res.safe_set);
  return row;
}

}  // namespace detail

inline std::vector<SweepRow> impact_sweep(const PlantModel& p, const Gains& gn,
                                          const HPolytope& R, const SweepSpec& spec,
                                          double e_max, const Tolerances& tol = {}) {
  auto nominal = detail::checked_nominal(p, gn, R, e_max, tol, spec.l_max);
  std::vector<SweepRow> rows;
  for (int n_max : spec.n_max_values) {
    std::vector<AttackChannel> channels;
    if (n_max > 0) {
      AttackChannel ch;
      ch.pattern.kind = spec.kind;
      ch.pattern.index = spec.index;
      ch.pattern.pattern = build_dwell_graph(n_max, resolve_n_min(spec.n_min_rule, n_max));
      ch.bound = spec.bound;
      channels.push_back(std::move(ch));
    }
    rows.push_back(detail::sweep_row(p, gn, R, channels, e_max, tol, spec.l_max, nominal, n_max));
  }
  return rows;
}

inline std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out = "n_max,I1,I2,vol_nominal,vol_attacked,mu,volume_mode,mu_mode,status\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%d,%.10g,%.10g,%.10g,%.10g,%.10g,%s,%s,%s\n",
                  r.n_max, r.impact.I1, r.impact.I2, r.impact.vol_nominal,
                  r.impact.vol_attacked, r.impact.mu, r.impact.volume_mode.c_str(),
                  r.impact.mu_mode.c_str(), r.status.c_str());
    out += buf;
  }
  return out;
}

}  // namespace polyreach
