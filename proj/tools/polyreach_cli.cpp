// Command-line front end: validate scenario files, compute safe sets, score
// attack-impact sweeps, stress-test claimed safe sets, and export plot data.
//
// Exit codes: 0 success, 2 scenario/input validation failure, 3 numerical
// failure inside the engines.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "polyreach/scenario.hpp"

namespace {

using namespace polyreach;

// ---------------------------------------------------------------------------
// Shared plumbing
// ---------------------------------------------------------------------------

struct CommonOpts {
  std::string out_dir;  // --out; empty means scenario default / environment
  int l_max = -1;       // --lmax; negative means scenario default
  std::string mode = "exact";
  std::int64_t seed = -1;  // --seed; negative means scenario default
};

void add_common(CLI::App* cmd, CommonOpts& o, bool with_engine_flags = true) {
  cmd->add_option("--out", o.out_dir, "output directory (default: scenario file, then $POLYREACH_OUT)");
  if (with_engine_flags) {
    cmd->add_option("--lmax", o.l_max, "iteration cap for the fixed-point recursion");
    cmd->add_option("--mode", o.mode, "set representation: exact | convex-inner")
        ->check(CLI::IsMember({"exact", "convex-inner"}));
    cmd->add_option("--seed", o.seed, "master random seed override");
  }
}

// Precedence: explicit flag, then environment, then the scenario's own value.
std::string resolve_out_dir(const CommonOpts& o, const std::string& scenario_default) {
  if (!o.out_dir.empty()) return o.out_dir;
  if (const char* env = std::getenv("POLYREACH_OUT"); env != nullptr && *env != '\0') return env;
  return scenario_default;
}

void apply_overrides(Scenario& sc, const CommonOpts& o) {
  if (o.seed >= 0) {
    sc.seed = static_cast<std::uint64_t>(o.seed);
    sc.tol.rng_seed = sc.seed;
  }
  if (o.l_max >= 0) sc.sweep.l_max = o.l_max;
  if (o.mode == "convex-inner") sc.tol.max_union = 1;
}

int effective_lmax(const Scenario& sc, const CommonOpts& o) {
  return o.l_max >= 0 ? o.l_max : sc.sweep.l_max;
}

std::string ensure_dir(const std::string& dir) {
  std::filesystem::create_directories(dir);
  return dir;
}

std::string path_join(const std::string& dir, const std::string& file) {
  return (std::filesystem::path(dir) / file).string();
}

// Wall-clock facts live in a sidecar so the main outputs stay byte-identical
// across re-runs with the same inputs and seed.
class Sidecar {
 public:
  explicit Sidecar(std::string command) : command_(std::move(command)) {
    start_ = std::chrono::steady_clock::now();
  }

  void add_output(const std::string& path) { outputs_.push_back(path); }

  void write(const std::string& dir, const std::string& stem) {
    const double ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - start_)
                          .count();
    const std::time_t now = std::time(nullptr);
    char stamp[32];
    std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    Json j;
    j["command"] = command_;
    j["timestamp"] = stamp;
    j["wall_ms"] = ms;
    j["outputs"] = outputs_;
    write_text_file(path_join(dir, stem + "_meta.json"), j.dump(2) + "\n");
  }

 private:
  std::string command_;
  std::vector<std::string> outputs_;
  std::chrono::steady_clock::time_point start_;
};

const char* status_word(ReachStatus s) {
  switch (s) {
    case ReachStatus::Converged: return "converged";
    case ReachStatus::IterationCapReached: return "iteration_cap";
    case ReachStatus::Empty: return "empty";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// validate
// ---------------------------------------------------------------------------

int cmd_validate(const std::string& scenario_path) {
  const Scenario sc = load_scenario(scenario_path);
  const SwitchedSystem sys = build_system(sc);

  std::printf("scenario %s: ok\n", sc.name.c_str());
  std::printf("  plant: %ld states, %ld inputs, %ld outputs\n", sc.plant.A.rows(),
              sc.plant.B.cols(), sc.plant.C.rows());
  std::printf("  closed-loop spectral radii: control %.4f, observer %.4f\n",
              spectral_radius(sc.plant.A - sc.plant.B * sc.gains.K),
              spectral_radius(sc.plant.A - sc.gains.L * sc.plant.C));
  std::printf("  channels: %zu\n", sc.channels.size());
  for (const auto& c : sc.channels) {
    if (c.explicit_graph)
      std::printf("    %s %d, bound %g, explicit graph (%zu nodes)\n",
                  c.kind == ChannelPattern::Kind::Sensor ? "sensor" : "actuator", c.index,
                  c.bound, c.graph.nodes.size());
    else
      std::printf("    %s %d, bound %g, dwell n_max=%d n_min=%d\n",
                  c.kind == ChannelPattern::Kind::Sensor ? "sensor" : "actuator", c.index,
                  c.bound, c.n_max, c.n_min);
  }
  std::printf("  pattern graph: %zu nodes, %zu edges, %zu modes\n", sys.graph.nodes.size(),
              sys.graph.edges.size(), sys.modes.size());
  std::printf("  constraint set: %d rows in dimension %d\n", sys.Z.rows(), sys.Z.dim());
  if (sc.sweep.present) {
    std::printf("  sweep: %zu stops, recovery rule '%s', l_max %d\n",
                sc.sweep.n_max_values.size(), sc.sweep.n_min_rule.c_str(), sc.sweep.l_max);
  }
  return 0;
}

// ---------------------------------------------------------------------------
// reach
// ---------------------------------------------------------------------------

int cmd_reach(const std::string& scenario_path, const CommonOpts& opts) {
  Scenario sc = load_scenario(scenario_path);
  apply_overrides(sc, opts);
  const std::string dir = ensure_dir(resolve_out_dir(opts, sc.out_dir));
  Sidecar meta("reach");

  const SwitchedSystem sys = build_system(sc);
  const ReachResult res = backward_sequence(sys, sc.tol, effective_lmax(sc, opts));

  const std::string out_path = path_join(dir, sc.name + "_reach.json");
  write_text_file(out_path, to_json(res, sys).dump(2) + "\n");
  meta.add_output(out_path);
  meta.write(dir, sc.name + "_reach");

  std::printf("reach %s: %s after %d iterations (%s)\n", sc.name.c_str(),
              status_word(res.status), res.iterations, res.exact ? "exact" : "inner");
  for (const auto& n : res.notes) std::printf("  note: %s\n", n.c_str());
  std::size_t pieces = 0;
  for (const auto& u : res.per_node) pieces += u.pieces.size();
  std::printf("  per-node pieces: %zu total over %zu nodes; safe set: %zu piece(s)\n", pieces,
              res.per_node.size(), res.safe_set.pieces.size());
  std::printf("  wrote %s\n", out_path.c_str());
  return 0;
}

// ---------------------------------------------------------------------------
// metrics
// ---------------------------------------------------------------------------

int cmd_metrics(const std::string& scenario_path, const CommonOpts& opts) {
  Scenario sc = load_scenario(scenario_path);
  apply_overrides(sc, opts);
  const std::string dir = ensure_dir(resolve_out_dir(opts, sc.out_dir));
  Sidecar meta("metrics");

  ScenarioSweep sweep;
  if (sc.channels.empty()) {
    // Attack-free scenario: score the nominal safe set against itself.
    const ReachResult nominal = backward_sequence(build_system(sc), sc.tol, effective_lmax(sc, opts));
    if (nominal.status != ReachStatus::Converged || nominal.safe_set.pieces.size() != 1)
      throw NumericalFailure("metrics: attack-free safe set did not converge to one piece");
    SweepRow row;
    row.n_max = 0;
    row.impact = impact(nominal.safe_set.pieces[0], nominal.safe_set, sc.tol);
    sweep.full.push_back(row);
    const int n = nominal.safe_set.pieces[0].dim() / 2;
    std::vector<int> edims(static_cast<std::size_t>(n));
    std::iota(edims.begin(), edims.end(), n);
    const HPolytope s0 = slice(nominal.safe_set.pieces[0], edims, Vector::Zero(n));
    SweepRow srow;
    srow.n_max = 0;
    srow.impact = impact(s0, PolyUnion{s0.dim(), {s0}}, sc.tol);
    sweep.slice.push_back(srow);
  } else {
    if (!sc.sweep.present) throw SchemaError("sweep", "missing required field");
    sweep = scenario_sweep(sc);
  }

  const std::string full_path = path_join(dir, sc.name + "_metrics.csv");
  const std::string slice_path = path_join(dir, sc.name + "_metrics_slice.csv");
  write_text_file(full_path, sweep_csv(sweep.full));
  write_text_file(slice_path, sweep_csv(sweep.slice));
  meta.add_output(full_path);
  meta.add_output(slice_path);
  meta.write(dir, sc.name + "_metrics");

  std::printf("metrics %s: %zu sweep stop(s)\n", sc.name.c_str(), sweep.full.size());
  std::printf("  n_max      I1      I2  status\n");
  for (const auto& r : sweep.full)
    std::printf("  %5d  %6.4f  %6.4f  %s\n", r.n_max, r.impact.I1, r.impact.I2,
                r.status.c_str());
  std::printf("  wrote %s\n  wrote %s\n", full_path.c_str(), slice_path.c_str());
  return 0;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

int cmd_simulate(const std::string& scenario_path, const CommonOpts& opts,
                 std::string safe_path, int trials, int steps) {
  Scenario sc = load_scenario(scenario_path);
  apply_overrides(sc, opts);
  const std::string dir = ensure_dir(resolve_out_dir(opts, sc.out_dir));
  Sidecar meta("simulate");

  if (safe_path.empty()) safe_path = path_join(dir, sc.name + "_reach.json");
  Json safe_json;
  try {
    safe_json = read_json_file(safe_path);
  } catch (const Error& e) {
    throw SchemaError(safe_path, e.what());
  }
  const NamedReachResult claimed = reach_from_json(safe_json);
  const PolyUnion& safe = claimed.result.safe_set;

  const SwitchedSystem sys = build_system(sc);
  const Detector det{sc.detector.R};

  Json report;
  report["scenario"] = sc.name;
  report["safe_file"] = safe_path;
  report["trials"] = trials;
  report["steps"] = steps;
  report["seed"] = sc.seed;

  if (safe.pieces.empty()) {
    report["verdict"] = "vacuous";
    report["note"] = "claimed safe set is empty; nothing to probe";
    const std::string rep_path = path_join(dir, sc.name + "_simulate.json");
    write_text_file(rep_path, report.dump(2) + "\n");
    meta.add_output(rep_path);
    meta.write(dir, sc.name + "_simulate");
    std::printf("simulate %s: claimed safe set is empty; vacuously sound\n", sc.name.c_str());
    return 0;
  }

  // Interior rollouts: adversarial attack and disturbance play from points
  // sampled inside the claimed region, starting at every automaton phase.
  Rng master(sc.seed);
  long long exits = 0, attacked_alarms = 0, nominal_alarms = 0, forced_steps = 0;
  Trajectory worst;
  bool have_worst = false;
  for (int t = 0; t < trials; ++t) {
    Rng rng = master.derive(static_cast<std::uint64_t>(t));
    const auto& piece =
        safe.pieces[static_cast<std::size_t>(rng.pick(static_cast<int>(safe.pieces.size())))];
    Vector z0;
    try {
      z0 = sample_point(piece, rng);
    } catch (const Error&) {
      continue;  // degenerate piece; nothing to sample
    }
    SimOptions so;
    so.steps = steps;
    so.seed = mix_seed(sc.seed ^ static_cast<std::uint64_t>(t));
    so.start_node = rng.pick(static_cast<int>(sys.graph.nodes.size()));
    const Trajectory tr = rollout(sys, det, z0, so);
    if (tr.first_exit >= 0) {
      ++exits;
      if (!have_worst) {
        worst = tr;
        have_worst = true;
      }
    }
    for (std::size_t k = 0; k < tr.alarms.size(); ++k) {
      if (tr.forced[k]) ++forced_steps;
      if (!tr.alarms[k]) continue;
      if (tr.attacked[k] && !tr.forced[k])
        ++attacked_alarms;
      else
        ++nominal_alarms;
    }
  }

  // Boundary probing: greedy escape attempts from the claimed boundary shell.
  const Falsification fal =
      falsify(sys, det, safe, std::max(1, trials / 10), steps, mix_seed(sc.seed + 1));

  Json interior;
  interior["rollouts"] = trials;
  interior["constraint_exits"] = exits;
  interior["attacked_step_alarms"] = attacked_alarms;
  interior["nominal_step_alarms"] = nominal_alarms;
  interior["forced_steps"] = forced_steps;
  report["interior"] = std::move(interior);

  Json boundary;
  boundary["trials"] = fal.trials;
  boundary["escape_found"] = fal.found;
  boundary["outside_probes"] = fal.outside_trials;
  boundary["outside_escapes"] = fal.outside_escapes;
  report["boundary"] = std::move(boundary);

  const bool violated = exits > 0 || attacked_alarms > 0 || fal.found;
  report["verdict"] = violated ? "violated" : "sound";

  const std::string rep_path = path_join(dir, sc.name + "_simulate.json");
  write_text_file(rep_path, report.dump(2) + "\n");
  meta.add_output(rep_path);
  if (violated) {
    const Trajectory& witness = fal.found ? fal.witness : worst;
    const std::string wit_path = path_join(dir, sc.name + "_witness.jsonl");
    write_text_file(wit_path, trajectory_jsonl(witness, sys));
    meta.add_output(wit_path);
    std::printf("  witness trajectory: %s\n", wit_path.c_str());
  }
  meta.write(dir, sc.name + "_simulate");

  std::printf("simulate %s: %s\n", sc.name.c_str(), violated ? "VIOLATED" : "sound");
  std::printf("  interior rollouts: %d, constraint exits: %lld, stealthy-step alarms: %lld\n",
              trials, exits, attacked_alarms);
  std::printf("  post/pre-attack alarms (informational): %lld, forced steps: %lld\n",
              nominal_alarms, forced_steps);
  std::printf("  boundary probes: %d, escape found: %s\n", fal.trials,
              fal.found ? "yes" : "no");
  std::printf("  wrote %s\n", rep_path.c_str());
  return 0;
}

// ---------------------------------------------------------------------------
// export
// ---------------------------------------------------------------------------

// CSV vertex loops of a 2-D slice of every piece, counter-clockwise, starting
// from the lexicographically smallest vertex.
std::string slice_csv(const PolyUnion& set, int keep_a, int keep_b, const Vector& anchor) {
  std::vector<int> fixed;
  for (int d = 0; d < set.dim; ++d)
    if (d != keep_a && d != keep_b) fixed.push_back(d);
  Vector vals(static_cast<int>(fixed.size()));
  for (std::size_t i = 0; i < fixed.size(); ++i) vals[static_cast<int>(i)] = anchor[fixed[i]];

  char buf[128];
  std::string csv = "piece,vertex,z" + std::to_string(keep_a + 1) + ",z" +
                    std::to_string(keep_b + 1) + "\n";
  int piece_id = 0;
  for (const auto& p : set.pieces) {
    const HPolytope cut = slice(p, fixed, vals);
    if (cut.explicitly_empty() || is_empty(cut)) continue;
    std::vector<Vector> vs = vertices(cut);
    if (vs.empty()) continue;
    Vector c = Vector::Zero(2);
    for (const auto& v : vs) c += v;
    c /= static_cast<double>(vs.size());
    std::sort(vs.begin(), vs.end(), [&](const Vector& a, const Vector& b) {
      return std::atan2(a[1] - c[1], a[0] - c[0]) < std::atan2(b[1] - c[1], b[0] - c[0]);
    });
    std::size_t first = 0;
    for (std::size_t i = 1; i < vs.size(); ++i)
      if (vs[i][0] < vs[first][0] || (vs[i][0] == vs[first][0] && vs[i][1] < vs[first][1]))
        first = i;
    for (std::size_t i = 0; i < vs.size(); ++i) {
      const Vector& v = vs[(first + i) % vs.size()];
      std::snprintf(buf, sizeof(buf), "%d,%zu,%.10g,%.10g\n", piece_id, i, v[0], v[1]);
      csv += buf;
    }
    ++piece_id;
  }
  return csv;
}

int cmd_export(const std::string& result_path, const CommonOpts& opts, std::string dims_arg,
               std::vector<double> anchor_arg, const std::string& node) {
  Json j;
  try {
    j = read_json_file(result_path);
  } catch (const Error& e) {
    throw SchemaError(result_path, e.what());
  }
  NamedReachResult named;
  try {
    named = reach_from_json(j);
  } catch (const std::exception& e) {
    throw SchemaError(result_path, std::string("not a reach result: ") + e.what());
  }

  const PolyUnion* set = &named.result.safe_set;
  std::string label = "safe";
  if (!node.empty()) {
    auto it = std::find(named.node_names.begin(), named.node_names.end(), node);
    if (it == named.node_names.end()) throw SchemaError("--node", "unknown node '" + node + "'");
    set = &named.result.per_node[static_cast<std::size_t>(it - named.node_names.begin())];
    label = node;
  }

  int keep_a = 0, keep_b = 1;
  if (!dims_arg.empty()) {
    const auto comma = dims_arg.find(',');
    if (comma == std::string::npos) throw SchemaError("--dims", "expected two indices i,j");
    try {
      keep_a = std::stoi(dims_arg.substr(0, comma)) - 1;
      keep_b = std::stoi(dims_arg.substr(comma + 1)) - 1;
    } catch (const std::exception&) {
      throw SchemaError("--dims", "expected two integer indices i,j");
    }
  }
  if (keep_a == keep_b || keep_a < 0 || keep_b < 0 || keep_a >= set->dim || keep_b >= set->dim)
    throw SchemaError("--dims", "kept coordinates must be distinct and within 1.." +
                                    std::to_string(set->dim));
  if (keep_a > keep_b) std::swap(keep_a, keep_b);

  Vector anchor = Vector::Zero(set->dim);
  if (!anchor_arg.empty()) {
    if (static_cast<int>(anchor_arg.size()) != set->dim)
      throw SchemaError("--at", "expected " + std::to_string(set->dim) + " coordinates");
    for (int d = 0; d < set->dim; ++d) anchor[d] = anchor_arg[static_cast<std::size_t>(d)];
  }

  const std::string stem = std::filesystem::path(result_path).stem().string();
  std::string default_dir = std::filesystem::path(result_path).parent_path().string();
  if (default_dir.empty()) default_dir = ".";
  const std::string dir = ensure_dir(resolve_out_dir(opts, default_dir));
  Sidecar meta("export");

  const std::string csv = slice_csv(*set, keep_a, keep_b, anchor);
  const std::string out_path = path_join(dir, stem + "_" + label + "_slice.csv");
  write_text_file(out_path, csv);
  meta.add_output(out_path);
  meta.write(dir, stem + "_" + label + "_slice");

  const long loops = std::count(csv.begin(), csv.end(), '\n') - 1;
  std::printf("export %s: %ld vertex row(s) for the %s set\n", stem.c_str(), loops,
              label.c_str());
  std::printf("  wrote %s\n", out_path.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Safe-set analysis of control loops under graph-constrained stealthy data injection"};
  app.require_subcommand(1);

  std::string scenario_path, result_path, safe_path, dims_arg = "1,2", node;
  std::vector<double> anchor_arg;
  int trials = 10000, steps = 50;
  CommonOpts vopts, ropts, mopts, sopts, eopts;

  CLI::App* validate = app.add_subcommand("validate", "check a scenario file and report its shape");
  validate->add_option("scenario", scenario_path, "scenario json file")->required();

  CLI::App* reach = app.add_subcommand("reach", "compute the maximal safe set");
  reach->add_option("scenario", scenario_path, "scenario json file")->required();
  add_common(reach, ropts);

  CLI::App* metrics = app.add_subcommand("metrics", "impact metrics over the attack-budget sweep");
  metrics->add_option("scenario", scenario_path, "scenario json file")->required();
  add_common(metrics, mopts);

  CLI::App* simulate = app.add_subcommand("simulate", "adversarial rollouts against a claimed safe set");
  simulate->add_option("scenario", scenario_path, "scenario json file")->required();
  simulate->add_option("--safe", safe_path, "reach result json (default: <out>/<name>_reach.json)");
  simulate->add_option("--trials", trials, "number of interior rollouts")->check(CLI::PositiveNumber);
  simulate->add_option("--steps", steps, "steps per rollout")->check(CLI::PositiveNumber);
  add_common(simulate, sopts);

  CLI::App* exportc = app.add_subcommand("export", "2-D slice of a reach result as CSV vertex loops");
  exportc->add_option("result", result_path, "reach result json file")->required();
  exportc->add_option("--dims", dims_arg, "kept coordinates as 1-based pair i,j (default 1,2)");
  exportc->add_option("--at", anchor_arg, "anchor values for the fixed coordinates (default origin)");
  exportc->add_option("--node", node, "export one automaton node's set instead of the safe set");
  add_common(exportc, eopts, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (validate->parsed()) return cmd_validate(scenario_path);
    if (reach->parsed()) return cmd_reach(scenario_path, ropts);
    if (metrics->parsed()) return cmd_metrics(scenario_path, mopts);
    if (simulate->parsed()) return cmd_simulate(scenario_path, sopts, safe_path, trials, steps);
    if (exportc->parsed()) return cmd_export(result_path, eopts, dims_arg, anchor_arg, node);
  } catch (const SchemaError& e) {
    std::fprintf(stderr, "validation error: %s\n", e.what());
    return 2;
  } catch (const InvalidDwell& e) {
    std::fprintf(stderr, "validation error: %s\n", e.what());
    return 2;
  } catch (const Error& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 0;
}
