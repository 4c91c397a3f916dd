#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "polyreach/sim.hpp"

namespace polyreach {

// Insertion-ordered documents so that re-runs emit byte-identical files.
using Json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Core value types
// ---------------------------------------------------------------------------

inline Json to_json(const Vector& v) {
  Json j = Json::array();
  for (int i = 0; i < v.size(); ++i) j.push_back(v[i]);
  return j;
}

inline Json to_json(const Matrix& M) {
  Json j = Json::array();
  for (int r = 0; r < M.rows(); ++r) {
    Json row = Json::array();
    for (int c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
    j.push_back(std::move(row));
  }
  return j;
}

inline Vector vector_from_json(const Json& j) {
  if (!j.is_array()) throw Error("vector: expected a json array");
  Vector v(static_cast<int>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw Error("vector: expected numbers");
    v[static_cast<int>(i)] = j[i].get<double>();
  }
  return v;
}

// `cols` disambiguates the width of a matrix with zero rows.
inline Matrix matrix_from_json(const Json& j, int cols = -1) {
  if (!j.is_array()) throw Error("matrix: expected a json array of rows");
  const int m = static_cast<int>(j.size());
  if (m == 0) {
    if (cols < 0) throw Error("matrix: cannot infer width of an empty matrix");
    return Matrix::Zero(0, cols);
  }
  const int n = static_cast<int>(j[0].size());
  if (cols >= 0 && n != cols) throw Error("matrix: unexpected row width");
  Matrix M(m, n);
  for (int r = 0; r < m; ++r) {
    if (!j[static_cast<std::size_t>(r)].is_array() ||
        static_cast<int>(j[static_cast<std::size_t>(r)].size()) != n)
      throw Error("matrix: ragged rows");
    for (int c = 0; c < n; ++c) M(r, c) = j[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)].get<double>();
  }
  return M;
}

// ---------------------------------------------------------------------------
// Sets
// ---------------------------------------------------------------------------

inline Json to_json(const HPolytope& P) {
  Json j;
  j["dim"] = P.dim();
  if (P.explicitly_empty()) {
    j["empty"] = true;
    return j;
  }
  j["G"] = to_json(P.G());
  j["g"] = to_json(P.g());
  return j;
}

inline HPolytope polytope_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("dim")) throw Error("polytope: missing 'dim'");
  const int n = j.at("dim").get<int>();
  if (n < 0) throw Error("polytope: negative dimension");
  if (j.value("empty", false)) return HPolytope::empty(n);
  if (!j.contains("G") || !j.contains("g")) throw Error("polytope: missing 'G'/'g'");
  Matrix G = matrix_from_json(j.at("G"), n);
  Vector g = vector_from_json(j.at("g"));
  if (G.rows() != g.size()) throw Error("polytope: row count mismatch between 'G' and 'g'");
  return HPolytope(G, g);
}

inline Json to_json(const PolyUnion& U) {
  Json j;
  j["dim"] = U.dim;
  Json pieces = Json::array();
  for (const auto& p : U.pieces) pieces.push_back(to_json(p));
  j["pieces"] = std::move(pieces);
  return j;
}

inline PolyUnion union_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("dim") || !j.contains("pieces"))
    throw Error("union: missing 'dim'/'pieces'");
  PolyUnion U;
  U.dim = j.at("dim").get<int>();
  for (const auto& pj : j.at("pieces")) {
    HPolytope p = polytope_from_json(pj);
    if (p.dim() != U.dim) throw Error("union: piece dimension mismatch");
    U.pieces.push_back(std::move(p));
  }
  return U;
}

// Vertex cloud for plotting pipelines: {"V": [[...], ...]}.
inline Json vertices_to_json(const std::vector<Vector>& pts) {
  Json j;
  Json arr = Json::array();
  for (const auto& p : pts) arr.push_back(to_json(p));
  j["V"] = std::move(arr);
  return j;
}

inline Json to_json(const ParamPolytope& A) {
  Json j;
  j["na"] = A.na();
  j["nz"] = A.nz();
  j["Ga"] = to_json(A.Ga());
  j["h0"] = to_json(A.h0());
  j["Hz"] = to_json(A.Hz());
  return j;
}

inline ParamPolytope parampoly_from_json(const Json& j) {
  const int na = j.at("na").get<int>();
  const int nz = j.at("nz").get<int>();
  return ParamPolytope(matrix_from_json(j.at("Ga"), na), vector_from_json(j.at("h0")),
                       matrix_from_json(j.at("Hz"), nz));
}

// ---------------------------------------------------------------------------
// Graphs
// ---------------------------------------------------------------------------

inline Json to_json(const AttackGraph& G) {
  Json j;
  j["nodes"] = G.nodes;
  Json edges = Json::array();
  for (const auto& e : G.edges) edges.push_back(Json::array({e.src, e.dst, e.label}));
  j["edges"] = std::move(edges);
  return j;
}

inline AttackGraph graph_from_json(const Json& j) {
  AttackGraph G;
  if (!j.is_object() || !j.contains("nodes") || !j.contains("edges"))
    throw Error("graph: missing 'nodes'/'edges'");
  for (const auto& n : j.at("nodes")) G.nodes.push_back(n.get<std::string>());
  for (const auto& e : j.at("edges")) {
    if (!e.is_array() || e.size() != 3) throw Error("graph: edge must be [src, dst, label]");
    G.edges.push_back({e[0].get<std::string>(), e[1].get<std::string>(), e[2].get<std::string>()});
  }
  return G;
}

// ---------------------------------------------------------------------------
// Reachability results
// ---------------------------------------------------------------------------

inline std::string to_string(ReachStatus s) {
  switch (s) {
    case ReachStatus::Converged: return "converged";
    case ReachStatus::IterationCapReached: return "iteration_cap";
    case ReachStatus::Empty: return "empty";
  }
  return "unknown";
}

inline ReachStatus reach_status_from_string(const std::string& s) {
  if (s == "converged") return ReachStatus::Converged;
  if (s == "iteration_cap") return ReachStatus::IterationCapReached;
  if (s == "empty") return ReachStatus::Empty;
  throw Error("reach result: unknown status '" + s + "'");
}

inline Json to_json(const ReachResult& r, const SwitchedSystem& sys) {
  Json j;
  j["status"] = to_string(r.status);
  j["iterations"] = r.iterations;
  j["exact"] = r.exact;
  j["notes"] = r.notes;
  Json nodes = Json::array();
  for (std::size_t i = 0; i < r.per_node.size(); ++i) {
    Json nj;
    nj["name"] = sys.graph.nodes.at(i);
    nj["set"] = to_json(r.per_node[i]);
    nodes.push_back(std::move(nj));
  }
  j["nodes"] = std::move(nodes);
  j["safe_set"] = to_json(r.safe_set);
  return j;
}

struct NamedReachResult {
  ReachResult result;
  std::vector<std::string> node_names;
};

inline NamedReachResult reach_from_json(const Json& j) {
  NamedReachResult out;
  out.result.status = reach_status_from_string(j.at("status").get<std::string>());
  out.result.iterations = j.at("iterations").get<int>();
  out.result.exact = j.at("exact").get<bool>();
  for (const auto& n : j.at("notes")) out.result.notes.push_back(n.get<std::string>());
  for (const auto& nj : j.at("nodes")) {
    out.node_names.push_back(nj.at("name").get<std::string>());
    out.result.per_node.push_back(union_from_json(nj.at("set")));
  }
  out.result.safe_set = union_from_json(j.at("safe_set"));
  return out;
}

// ---------------------------------------------------------------------------
// Trajectories (JSON lines, one object per step plus a terminal state row)
// ---------------------------------------------------------------------------

inline std::string trajectory_jsonl(const Trajectory& tr, const SwitchedSystem& sys) {
  std::string out;
  const std::size_t T = tr.modes.size();
  for (std::size_t k = 0; k <= T && k < tr.z.size(); ++k) {
    Json j;
    j["k"] = static_cast<int>(k);
    j["node"] = sys.graph.nodes.at(static_cast<std::size_t>(tr.nodes.at(k)));
    j["z"] = to_json(tr.z[k]);
    if (k < T) {
      j["mode"] = tr.modes[k] + 1;  // external ids are 1-based
      j["attack"] = to_json(tr.attacks[k]);
      j["noise"] = to_json(tr.noises[k]);
      j["residual"] = to_json(tr.residuals[k]);
      j["alarm"] = static_cast<bool>(tr.alarms[k]);
      j["attacked"] = static_cast<bool>(tr.attacked[k]);
      j["forced"] = static_cast<bool>(tr.forced[k]);
    }
    if (tr.first_exit >= 0 && static_cast<int>(k) == tr.first_exit) j["exits_constraints"] = true;
    out += j.dump();
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Files
// ---------------------------------------------------------------------------

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open for writing: " + path);
  f << content;
  if (!f) throw Error("write failed: " + path);
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open for reading: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

inline Json read_json_file(const std::string& path) {
  const std::string text = read_text_file(path);
  Json j = Json::parse(text, nullptr, false);
  if (j.is_discarded()) throw Error("invalid json in " + path);
  return j;
}

}  // namespace polyreach
