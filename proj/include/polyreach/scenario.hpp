#pragma once

#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "polyreach/metrics.hpp"
#include "polyreach/serialization.hpp"

namespace polyreach {

struct ScenarioChannel {
  ChannelPattern::Kind kind = ChannelPattern::Kind::Sensor;
  int index = 1;
  double bound = 0.0;
  bool explicit_graph = false;
  int n_max = 1, n_min = 1;  // dwell pair (when not an explicit graph)
  AttackGraph graph;
  std::string n_min_rule;  // recovery rule for sweeps; empty: use the global one
};

struct SweepBlock {
  bool present = false;
  std::vector<int> n_max_values;
  std::string n_min_rule = "1";
  int l_max = 200;
};

// A fully validated scenario.  The plant is stored in deviation coordinates
// around the operating point (the loaded file speaks absolute units).
struct Scenario {
  std::string name = "scenario";
  PlantModel plant;
  Gains gains;
  Detector detector;
  double e_max = 0.5;
  std::vector<ScenarioChannel> channels;
  SweepBlock sweep;
  Tolerances tol;
  std::uint64_t seed = 12345;
  std::string out_dir = "out";
  Vector x_star, u_star;  // absolute operating point, kept for reporting
};

namespace detail {

inline std::string joined(const std::string& base, const std::string& key) {
  return base.empty() ? key : base + "." + key;
}

inline const Json& require_key(const Json& j, const std::string& base, const std::string& key) {
  if (!j.is_object()) throw SchemaError(base, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) throw SchemaError(joined(base, key), "missing required field");
  return *it;
}

inline void reject_unknown(const Json& j, const std::string& base,
                           const std::set<std::string>& allowed) {
  if (!j.is_object()) throw SchemaError(base, "expected an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key())) throw SchemaError(joined(base, it.key()), "unknown field");
}

inline double number_at(const Json& j, const std::string& where) {
  if (!j.is_number()) throw SchemaError(where, "expected a number");
  return j.get<double>();
}

inline int int_at(const Json& j, const std::string& where) {
  if (!j.is_number_integer()) throw SchemaError(where, "expected an integer");
  return j.get<int>();
}

inline std::string string_at(const Json& j, const std::string& where) {
  if (!j.is_string()) throw SchemaError(where, "expected a string");
  return j.get<std::string>();
}

inline Matrix matrix_at(const Json& j, const std::string& where, int cols = -1) {
  try {
    return matrix_from_json(j, cols);
  } catch (const Error& e) {
    throw SchemaError(where, e.what());
  }
}

inline Vector vector_at(const Json& j, const std::string& where, int len = -1) {
  Vector v;
  try {
    v = vector_from_json(j);
  } catch (const Error& e) {
    throw SchemaError(where, e.what());
  }
  if (len >= 0 && v.size() != len)
    throw SchemaError(where, "expected " + std::to_string(len) + " entries");
  return v;
}

inline HPolytope box_between(const Vector& lo, const Vector& hi, const std::string& where) {
  for (int i = 0; i < lo.size(); ++i)
    if (!(lo[i] < hi[i])) throw SchemaError(where, "lower bound must be below upper bound");
  return HPolytope::box(lo, hi);
}

}  // namespace detail

inline Scenario parse_scenario(const Json& root) {
  using detail::int_at;
  using detail::joined;
  using detail::matrix_at;
  using detail::number_at;
  using detail::require_key;
  using detail::string_at;
  using detail::vector_at;

  Scenario sc;
  detail::reject_unknown(root, "", {"name", "plant", "gains", "detector", "e_max", "channels",
                                    "sweep", "tolerances", "seed", "out_dir"});
  if (root.contains("name")) sc.name = string_at(root.at("name"), "name");

  // ----- plant ------------------------------------------------------------
  const Json& pj = require_key(root, "", "plant");
  detail::reject_unknown(pj, "plant",
                         {"A", "B", "C", "x_min", "x_max", "u_min", "u_max", "y_min", "y_max",
                          "v_bound", "w_bound", "operating_point"});
  Matrix A = matrix_at(require_key(pj, "plant", "A"), "plant.A");
  const int n = static_cast<int>(A.rows());
  if (A.cols() != n || n == 0) throw SchemaError("plant.A", "expected a square matrix");
  Matrix B = matrix_at(require_key(pj, "plant", "B"), "plant.B");
  if (B.rows() != n) throw SchemaError("plant.B", "row count must match the state dimension");
  const int nu = static_cast<int>(B.cols());
  if (nu == 0) throw SchemaError("plant.B", "expected at least one input column");
  Matrix C = matrix_at(require_key(pj, "plant", "C"), "plant.C", n);
  const int ny = static_cast<int>(C.rows());
  if (ny == 0) throw SchemaError("plant.C", "expected at least one output row");

  Vector x_min = vector_at(require_key(pj, "plant", "x_min"), "plant.x_min", n);
  Vector x_max = vector_at(require_key(pj, "plant", "x_max"), "plant.x_max", n);
  Vector u_min = vector_at(require_key(pj, "plant", "u_min"), "plant.u_min", nu);
  Vector u_max = vector_at(require_key(pj, "plant", "u_max"), "plant.u_max", nu);
  const double v_bound = number_at(require_key(pj, "plant", "v_bound"), "plant.v_bound");
  if (v_bound <= 0.0) throw SchemaError("plant.v_bound", "must be positive");
  const double w_bound = number_at(require_key(pj, "plant", "w_bound"), "plant.w_bound");
  if (w_bound <= 0.0) throw SchemaError("plant.w_bound", "must be positive");

  const Json& op = require_key(pj, "plant", "operating_point");
  detail::reject_unknown(op, "plant.operating_point", {"x", "u"});
  sc.x_star = vector_at(require_key(op, "plant.operating_point", "x"), "plant.operating_point.x", n);
  sc.u_star = vector_at(require_key(op, "plant.operating_point", "u"), "plant.operating_point.u", nu);
  const double eq_residual = (sc.x_star - A * sc.x_star - B * sc.u_star).cwiseAbs().maxCoeff();
  if (eq_residual > 1e-6)
    throw SchemaError("plant.operating_point",
                      "not an equilibrium of the plant (residual " + std::to_string(eq_residual) + ")");

  sc.plant.A = std::move(A);
  sc.plant.B = std::move(B);
  sc.plant.C = std::move(C);
  // shift every constraint to deviation coordinates around the operating point
  sc.plant.X = translate(detail::box_between(x_min, x_max, "plant.x_min"), -sc.x_star);
  sc.plant.U = translate(detail::box_between(u_min, u_max, "plant.u_min"), -sc.u_star);
  if (pj.contains("y_min") || pj.contains("y_max")) {
    Vector y_min = vector_at(require_key(pj, "plant", "y_min"), "plant.y_min", ny);
    Vector y_max = vector_at(require_key(pj, "plant", "y_max"), "plant.y_max", ny);
    sc.plant.Y = translate(detail::box_between(y_min, y_max, "plant.y_min"), -sc.plant.C * sc.x_star);
  } else {
    // tightest box the state constraints induce on the noise-free output
    Vector hi(ny), lo(ny);
    for (int i = 0; i < ny; ++i) {
      hi[i] = support(sc.plant.X, sc.plant.C.row(i).transpose());
      lo[i] = -support(sc.plant.X, -sc.plant.C.row(i).transpose());
    }
    sc.plant.Y = HPolytope::box(lo, hi);
  }
  sc.plant.V = HPolytope::box(n, v_bound);
  sc.plant.W = HPolytope::box(ny, w_bound);

  // ----- gains --------------------------------------------------------------
  const Json& gj = require_key(root, "", "gains");
  if (gj.contains("K") || gj.contains("L")) {
    detail::reject_unknown(gj, "gains", {"K", "L"});
    sc.gains.K = matrix_at(require_key(gj, "gains", "K"), "gains.K", n);
    if (sc.gains.K.rows() != nu) throw SchemaError("gains.K", "expected one row per input");
    sc.gains.L = matrix_at(require_key(gj, "gains", "L"), "gains.L", ny);
    if (sc.gains.L.rows() != n) throw SchemaError("gains.L", "expected one row per state");
  } else {
    detail::reject_unknown(gj, "gains", {"controller_poles", "observer_poles"});
    const Json& cp = require_key(gj, "gains", "controller_poles");
    const Json& opj = require_key(gj, "gains", "observer_poles");
    Vector cpo = vector_at(cp, "gains.controller_poles", n);
    Vector obo = vector_at(opj, "gains.observer_poles", n);
    if (nu != 1) throw SchemaError("gains.controller_poles", "pole placement needs a single input");
    if (ny != 1) throw SchemaError("gains.observer_poles", "pole placement needs a single output");
    std::vector<double> cv(cpo.data(), cpo.data() + n), ov(obo.data(), obo.data() + n);
    try {
      sc.gains.K = ackermann_place(sc.plant.A, sc.plant.B, cv);
      sc.gains.L = ackermann_place(sc.plant.A.transpose(), sc.plant.C.transpose(), ov).transpose();
    } catch (const Error& e) {
      throw SchemaError("gains", e.what());
    }
  }

  // ----- detector -----------------------------------------------------------
  const Json& dj = require_key(root, "", "detector");
  if (dj.contains("bound")) {
    detail::reject_unknown(dj, "detector", {"bound"});
    const double b = number_at(dj.at("bound"), "detector.bound");
    if (b <= 0.0) throw SchemaError("detector.bound", "must be positive");
    sc.detector.R = HPolytope::box(ny, b);
  } else {
    detail::reject_unknown(dj, "detector", {"dim", "G", "g"});
    Json dp = dj;
    dp["dim"] = ny;
    try {
      sc.detector.R = polytope_from_json(dp);
    } catch (const Error& e) {
      throw SchemaError("detector", e.what());
    }
    if (!is_cset(sc.detector.R))
      throw SchemaError("detector", "acceptance set must be a bounded set around zero");
  }

  // ----- scalars --------------------------------------------------------------
  sc.e_max = number_at(require_key(root, "", "e_max"), "e_max");
  if (sc.e_max <= 0.0) throw SchemaError("e_max", "must be positive");
  if (root.contains("seed")) {
    if (!root.at("seed").is_number_unsigned() && !root.at("seed").is_number_integer())
      throw SchemaError("seed", "expected a non-negative integer");
    const auto s = root.at("seed").get<long long>();
    if (s < 0) throw SchemaError("seed", "expected a non-negative integer");
    sc.seed = static_cast<std::uint64_t>(s);
  }
  if (root.contains("out_dir")) {
    sc.out_dir = string_at(root.at("out_dir"), "out_dir");
    if (sc.out_dir.empty()) throw SchemaError("out_dir", "must not be empty");
  }

  // ----- channels -------------------------------------------------------------
  const Json& cj = require_key(root, "", "channels");
  if (!cj.is_array()) throw SchemaError("channels", "expected an array");
  for (std::size_t i = 0; i < cj.size(); ++i) {
    const std::string base = "channels[" + std::to_string(i) + "]";
    const Json& ch = cj[i];
    detail::reject_unknown(ch, base, {"type", "index", "bound", "dwell", "graph", "n_min_rule"});
    ScenarioChannel out;
    const std::string type = string_at(require_key(ch, base, "type"), base + ".type");
    if (type == "sensor")
      out.kind = ChannelPattern::Kind::Sensor;
    else if (type == "actuator")
      out.kind = ChannelPattern::Kind::Actuator;
    else
      throw SchemaError(base + ".type", "expected 'sensor' or 'actuator'");
    out.index = int_at(require_key(ch, base, "index"), base + ".index");
    const int total = out.kind == ChannelPattern::Kind::Sensor ? ny : nu;
    if (out.index < 1 || out.index > total)
      throw SchemaError(base + ".index", "channel index out of range (1.." + std::to_string(total) + ")");
    out.bound = number_at(require_key(ch, base, "bound"), base + ".bound");
    if (out.bound <= 0.0) throw SchemaError(base + ".bound", "must be positive");
    if (ch.contains("dwell") == ch.contains("graph"))
      throw SchemaError(base, "expected exactly one of 'dwell' or 'graph'");
    if (ch.contains("dwell")) {
      const Json& dw = ch.at("dwell");
      detail::reject_unknown(dw, base + ".dwell", {"n_max", "n_min"});
      out.n_max = int_at(require_key(dw, base + ".dwell", "n_max"), base + ".dwell.n_max");
      out.n_min = int_at(require_key(dw, base + ".dwell", "n_min"), base + ".dwell.n_min");
      if (out.n_max < 1) throw SchemaError(base + ".dwell.n_max", "must be at least 1");
      if (out.n_min < 1) throw SchemaError(base + ".dwell.n_min", "must be at least 1");
    } else {
      out.explicit_graph = true;
      try {
        out.graph = graph_from_json(ch.at("graph"));
        validate(out.graph);
      } catch (const Error& e) {
        throw SchemaError(base + ".graph", e.what());
      }
    }
    if (ch.contains("n_min_rule")) {
      out.n_min_rule = string_at(ch.at("n_min_rule"), base + ".n_min_rule");
      try {
        resolve_n_min(out.n_min_rule, 2);
      } catch (const Error& e) {
        throw SchemaError(base + ".n_min_rule", e.what());
      }
    }
    sc.channels.push_back(std::move(out));
  }

  // ----- sweep ---------------------------------------------------------------
  if (root.contains("sweep")) {
    const Json& sj = root.at("sweep");
    detail::reject_unknown(sj, "sweep", {"n_max_values", "n_min_rule", "l_max"});
    sc.sweep.present = true;
    const Json& vals = require_key(sj, "sweep", "n_max_values");
    if (!vals.is_array() || vals.empty()) throw SchemaError("sweep.n_max_values", "expected a non-empty array");
    for (std::size_t i = 0; i < vals.size(); ++i) {
      const int v = int_at(vals[i], "sweep.n_max_values[" + std::to_string(i) + "]");
      if (v < 0) throw SchemaError("sweep.n_max_values[" + std::to_string(i) + "]", "must be non-negative");
      sc.sweep.n_max_values.push_back(v);
    }
    if (sj.contains("n_min_rule")) {
      sc.sweep.n_min_rule = string_at(sj.at("n_min_rule"), "sweep.n_min_rule");
      try {
        resolve_n_min(sc.sweep.n_min_rule, 2);
      } catch (const Error& e) {
        throw SchemaError("sweep.n_min_rule", e.what());
      }
    }
    if (sj.contains("l_max")) {
      sc.sweep.l_max = int_at(sj.at("l_max"), "sweep.l_max");
      if (sc.sweep.l_max < 1) throw SchemaError("sweep.l_max", "must be at least 1");
    }
  }

  // ----- tolerances ------------------------------------------------------------
  if (root.contains("tolerances")) {
    const Json& tj = root.at("tolerances");
    detail::reject_unknown(tj, "tolerances",
                           {"eps_feas", "eps_set", "eps_vol", "mc_samples", "max_union", "rng_seed"});
    if (tj.contains("eps_feas")) sc.tol.eps_feas = number_at(tj.at("eps_feas"), "tolerances.eps_feas");
    if (tj.contains("eps_set")) sc.tol.eps_set = number_at(tj.at("eps_set"), "tolerances.eps_set");
    if (tj.contains("eps_vol")) sc.tol.eps_vol = number_at(tj.at("eps_vol"), "tolerances.eps_vol");
    if (tj.contains("mc_samples")) sc.tol.mc_samples = int_at(tj.at("mc_samples"), "tolerances.mc_samples");
    if (tj.contains("max_union")) sc.tol.max_union = int_at(tj.at("max_union"), "tolerances.max_union");
    if (tj.contains("rng_seed"))
      sc.tol.rng_seed = static_cast<std::uint64_t>(int_at(tj.at("rng_seed"), "tolerances.rng_seed"));
    if (sc.tol.eps_feas <= 0 || sc.tol.eps_set <= 0 || sc.tol.eps_vol <= 0 ||
        sc.tol.mc_samples < 100 || sc.tol.max_union < 1)
      throw SchemaError("tolerances", "values out of range");
  }
  sc.tol.rng_seed = sc.seed;

  return sc;
}

inline Scenario load_scenario(const std::string& path) {
  Json j;
  try {
    j = read_json_file(path);
  } catch (const Error& e) {
    throw SchemaError("", e.what());
  }
  return parse_scenario(j);
}

// Channel list for the pattern actually stored in the scenario.
inline std::vector<AttackChannel> scenario_channels(const Scenario& sc) {
  std::vector<AttackChannel> out;
  for (const auto& c : sc.channels) {
    AttackChannel ch;
    ch.pattern.kind = c.kind;
    ch.pattern.index = c.index;
    ch.pattern.pattern = c.explicit_graph ? c.graph : build_dwell_graph(c.n_max, c.n_min);
    ch.bound = c.bound;
    out.push_back(std::move(ch));
  }
  return out;
}

inline SwitchedSystem build_system(const Scenario& sc) {
  return assemble_system(sc.plant, sc.gains, sc.detector.R, scenario_channels(sc), sc.e_max);
}

// Channel list for one sweep stop: every dwell channel is re-timed to the
// given attack budget, explicit graphs are kept as they are; a budget of zero
// removes the attacker entirely.
inline std::vector<AttackChannel> sweep_channels(const Scenario& sc, int n_max) {
  std::vector<AttackChannel> out;
  if (n_max == 0) return out;
  for (const auto& c : sc.channels) {
    AttackChannel ch;
    ch.pattern.kind = c.kind;
    ch.pattern.index = c.index;
    if (c.explicit_graph) {
      ch.pattern.pattern = c.graph;
    } else {
      const std::string& rule = c.n_min_rule.empty() ? sc.sweep.n_min_rule : c.n_min_rule;
      ch.pattern.pattern = build_dwell_graph(n_max, resolve_n_min(rule, n_max));
    }
    ch.bound = c.bound;
    out.push_back(std::move(ch));
  }
  return out;
}

struct ScenarioSweep {
  std::vector<SweepRow> full;   // metrics on the full analysis state
  std::vector<SweepRow> slice;  // metrics on the zero-estimation-error slice
};

// Impact table over the sweep's attack budgets, scored both on the full sets
// and on their slices at zero estimation error (the plotted projection).
inline ScenarioSweep scenario_sweep(const Scenario& sc) {
  if (!sc.sweep.present) throw Error("scenario '" + sc.name + "' has no sweep block");
  if (sc.channels.empty()) throw Error("scenario '" + sc.name + "' sweeps without channels");
  const auto nominal =
      detail::checked_nominal(sc.plant, sc.gains, sc.detector.R, sc.e_max, sc.tol, sc.sweep.l_max);
  const HPolytope& S0 = nominal.safe_set.pieces[0];
  const int n = S0.dim() / 2;
  std::vector<int> edims(static_cast<std::size_t>(n));
  std::iota(edims.begin(), edims.end(), n);
  const HPolytope S0_slice = slice(S0, edims, Vector::Zero(n));

  ScenarioSweep out;
  for (int v : sc.sweep.n_max_values) {
    PolyUnion attacked;
    out.full.push_back(detail::sweep_row(sc.plant, sc.gains, sc.detector.R, sweep_channels(sc, v),
                                         sc.e_max, sc.tol, sc.sweep.l_max, nominal, v, &attacked));
    PolyUnion att_slice;
    att_slice.dim = n;
    for (const auto& p : attacked.pieces) att_slice.pieces.push_back(slice(p, edims, Vector::Zero(n)));
    SweepRow srow;
    srow.n_max = v;
    srow.status = out.full.back().status;
    srow.impact = impact(S0_slice, att_slice, sc.tol);
    out.slice.push_back(std::move(srow));
  }
  return out;
}

}  // namespace polyreach
